#pragma once

#include "sthawkes/background.hpp"
#include "sthawkes/catalog.hpp"
#include "sthawkes/config.hpp"
#include "sthawkes/constraints.hpp"
#include "sthawkes/covariate.hpp"
#include "sthawkes/diagnostics.hpp"
#include "sthawkes/estimation.hpp"
#include "sthawkes/geometry.hpp"
#include "sthawkes/io.hpp"
#include "sthawkes/kernels.hpp"
#include "sthawkes/likelihood.hpp"
#include "sthawkes/model.hpp"
#include "sthawkes/optimize.hpp"
#include "sthawkes/presets.hpp"
#include "sthawkes/quadrature.hpp"
#include "sthawkes/serialize.hpp"
#include "sthawkes/simulation.hpp"
