#pragma once

#include "copmeta/error.hpp"
#include "copmeta/special.hpp"
#include "copmeta/quadrature.hpp"
#include "copmeta/copulas.hpp"
#include "copmeta/margins.hpp"
#include "copmeta/dependent_nodes.hpp"
#include "copmeta/likelihood.hpp"
#include "copmeta/optimize.hpp"
#include "copmeta/estimation.hpp"
#include "copmeta/inference.hpp"
#include "copmeta/simulation.hpp"
#include "copmeta/asymptotics.hpp"
#include "copmeta/io.hpp"
