#pragma once

#include "nullgeo/errors.hpp"
#include "nullgeo/spacetime.hpp"
#include "nullgeo/catalog.hpp"
#include "nullgeo/ode.hpp"
#include "nullgeo/csv.hpp"
#include "nullgeo/parallel.hpp"
#include "nullgeo/geodesic.hpp"
#include "nullgeo/congruence.hpp"
#include "nullgeo/slab.hpp"
#include "nullgeo/graphop.hpp"
#include "nullgeo/maxprin.hpp"
