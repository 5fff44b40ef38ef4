#pragma once

#include "errors.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "pressure_curve.hpp"
#include "transfer_operator.hpp"
#include "pressure.hpp"
#include "multifractal.hpp"
#include "ldp.hpp"
