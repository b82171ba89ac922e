#pragma once

#include "soundheat/banded.hpp"
#include "soundheat/bundle.hpp"
#include "soundheat/convergence.hpp"
#include "soundheat/diagnostics.hpp"
#include "soundheat/energy.hpp"
#include "soundheat/grid.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/operator.hpp"
#include "soundheat/oracle.hpp"
#include "soundheat/state.hpp"
#include "soundheat/stepper.hpp"
