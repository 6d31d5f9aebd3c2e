#pragma once

#include "core.hpp"
#include "covering.hpp"
#include "density.hpp"
#include "expression.hpp"
#include "geometry.hpp"
#include "inequalities.hpp"
#include "quadrature.hpp"
#include "seminorm.hpp"
#include "special.hpp"
#include "trial.hpp"
