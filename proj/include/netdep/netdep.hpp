#pragma once

#include "netdep/error.hpp"
#include "netdep/random.hpp"
#include "netdep/graph.hpp"
#include "netdep/deptest.hpp"
#include "netdep/simulate.hpp"
#include "netdep/inference.hpp"
#include "netdep/io.hpp"
#include "netdep/experiments.hpp"
