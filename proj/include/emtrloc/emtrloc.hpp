// Umbrella header: the whole fault-location toolkit in one include.
#pragma once

#include <emtrloc/emtr.hpp>
#include <emtrloc/errors.hpp>
#include <emtrloc/fft.hpp>
#include <emtrloc/linemath.hpp>
#include <emtrloc/netmodel.hpp>
#include <emtrloc/signals.hpp>
#include <emtrloc/solver.hpp>
#include <emtrloc/store.hpp>
#include <emtrloc/units.hpp>
