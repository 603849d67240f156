#pragma once

#include "sentrade/adaptive.hpp"
#include "sentrade/backtest.hpp"
#include "sentrade/config.hpp"
#include "sentrade/model_space.hpp"
#include "sentrade/regression.hpp"
#include "sentrade/sessions.hpp"
#include "sentrade/synth.hpp"
#include "sentrade/time.hpp"
