#pragma once

#include "beamforge/beampattern.hpp"
#include "beamforge/core_model.hpp"
#include "beamforge/matrix.hpp"
#include "beamforge/parallel.hpp"
#include "beamforge/protocol.hpp"
#include "beamforge/quadrature.hpp"
#include "beamforge/sep.hpp"
#include "beamforge/stochastic.hpp"
