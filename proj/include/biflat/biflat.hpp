#pragma once

#include "biflat/coeff.hpp"
#include "biflat/errors.hpp"
#include "biflat/expr.hpp"
#include "biflat/jet.hpp"
#include "biflat/parser.hpp"
#include "biflat/tensor.hpp"
#include "biflat/geometry.hpp"
#include "biflat/charpoly.hpp"
#include "biflat/report.hpp"
#include "biflat/structures.hpp"
#include "biflat/gauss_manin.hpp"
#include "biflat/bicomplex.hpp"
#include "biflat/lm_chain.hpp"
#include "biflat/suite.hpp"
