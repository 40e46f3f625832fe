#pragma once

#include "dyntrend/activeness.hpp"
#include "dyntrend/baselines.hpp"
#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/evaluation.hpp"
#include "dyntrend/learning.hpp"
#include "dyntrend/params_io.hpp"
#include "dyntrend/proximity.hpp"
#include "dyntrend/report.hpp"
#include "dyntrend/rng.hpp"
#include "dyntrend/simulation.hpp"
#include "dyntrend/synth.hpp"
#include "dyntrend/text.hpp"
