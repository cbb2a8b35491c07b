#pragma once

#include "fraccn/assembly.hpp"
#include "fraccn/errors.hpp"
#include "fraccn/harness.hpp"
#include "fraccn/linear_solver.hpp"
#include "fraccn/mesh.hpp"
#include "fraccn/problems.hpp"
#include "fraccn/quadrature.hpp"
#include "fraccn/sparse.hpp"
#include "fraccn/stepper.hpp"
#include "fraccn/verify.hpp"
