#pragma once

#include "gemengelab/correlations.hpp"
#include "gemengelab/detector.hpp"
#include "gemengelab/errors.hpp"
#include "gemengelab/gemenge.hpp"
#include "gemengelab/hilbert.hpp"
#include "gemengelab/locality.hpp"
#include "gemengelab/observables.hpp"
#include "gemengelab/premeasurement.hpp"
#include "gemengelab/random.hpp"
#include "gemengelab/scenario.hpp"
#include "gemengelab/tolerances.hpp"
