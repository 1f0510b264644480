#pragma once

// Everything except the command-line front end.

#include "gridseam/error.hpp"
#include "gridseam/netmodel.hpp"
#include "gridseam/case_io.hpp"
#include "gridseam/powerflow.hpp"
#include "gridseam/merge.hpp"
#include "gridseam/measurements.hpp"
#include "gridseam/dynamics.hpp"
#include "gridseam/ras.hpp"
#include "gridseam/contingency.hpp"
#include "gridseam/validation.hpp"
