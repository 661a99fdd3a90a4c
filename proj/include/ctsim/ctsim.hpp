#ifndef CTSIM_CTSIM_HPP
#define CTSIM_CTSIM_HPP

#include <ctsim/epidemic.hpp>
#include <ctsim/error.hpp>
#include <ctsim/geometry.hpp>
#include <ctsim/kernel.hpp>
#include <ctsim/metrics.hpp>
#include <ctsim/observation_io.hpp>
#include <ctsim/random.hpp>
#include <ctsim/scenario.hpp>
#include <ctsim/synthgen.hpp>
#include <ctsim/trajectory.hpp>

#endif
