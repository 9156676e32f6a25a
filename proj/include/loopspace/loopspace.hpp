#pragma once

#include "action.hpp"
#include "field.hpp"
#include "flow.hpp"
#include "fourier.hpp"
#include "hamiltonian.hpp"
#include "hash.hpp"
#include "loop.hpp"
#include "manifold.hpp"
#include "minimax.hpp"
#include "samplers.hpp"
#include "spectral.hpp"
