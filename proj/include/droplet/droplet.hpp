#pragma once

// Core library. The batch layer (experiment.hpp) is separate because it pulls
// in the JSON dependency.

#include "droplet/params.hpp"
#include "droplet/quadrature.hpp"
#include "droplet/sphere_basis.hpp"
#include "droplet/shape.hpp"
#include "droplet/ball.hpp"
#include "droplet/mode_spectrum.hpp"
#include "droplet/domain_map.hpp"
#include "droplet/transmission.hpp"
#include "droplet/shape_calculus.hpp"
