#pragma once

#include "mimocs/analysis.hpp"
#include "mimocs/errors.hpp"
#include "mimocs/experiments.hpp"
#include "mimocs/io.hpp"
#include "mimocs/measurement_operator.hpp"
#include "mimocs/parallel.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"
#include "mimocs/signals.hpp"
#include "mimocs/solvers.hpp"
#include "mimocs/support.hpp"
