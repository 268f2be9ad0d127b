#pragma once

#include "nlflux/error.hpp"
#include "nlflux/geometry.hpp"
#include "nlflux/fields.hpp"
#include "nlflux/calculus.hpp"
#include "nlflux/mixed_norms.hpp"
#include "nlflux/solvers.hpp"
#include "nlflux/design.hpp"
