#pragma once

#include "icte/geometry.hpp"
#include "icte/scan.hpp"
#include "icte/estimator.hpp"
#include "icte/perturbation.hpp"
#include "icte/fixtures.hpp"
#include "icte/dataset.hpp"
#include "icte/synthetic_log.hpp"
#include "icte/bench.hpp"
