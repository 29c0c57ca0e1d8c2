#pragma once

#include "graphon_lqr/artifacts.hpp"
#include "graphon_lqr/curve.hpp"
#include "graphon_lqr/error.hpp"
#include "graphon_lqr/graphon.hpp"
#include "graphon_lqr/lqr.hpp"
#include "graphon_lqr/riccati.hpp"
#include "graphon_lqr/scalar_poly.hpp"
#include "graphon_lqr/scenario.hpp"
#include "graphon_lqr/sim.hpp"
