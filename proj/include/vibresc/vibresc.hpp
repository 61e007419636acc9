#pragma once

#include "vibresc/analysis.hpp"
#include "vibresc/baselines.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/config.hpp"
#include "vibresc/core.hpp"
#include "vibresc/esc_loop.hpp"
#include "vibresc/integrator.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/output.hpp"
#include "vibresc/reproduction.hpp"
#include "vibresc/runner.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/simulation.hpp"
#include "vibresc/voc_averaging.hpp"
