#pragma once

#include "claw.hpp"
#include "cosym.hpp"
#include "diffops.hpp"
#include "equations.hpp"
#include "eval.hpp"
#include "expr.hpp"
#include "gardner.hpp"
#include "integrate.hpp"
#include "io.hpp"
#include "linsolve.hpp"
#include "poly.hpp"
#include "recon.hpp"
#include "series.hpp"
