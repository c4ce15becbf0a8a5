#pragma once

#include "snmdp/bellman.hpp"
#include "snmdp/diagnostics.hpp"
#include "snmdp/linalg.hpp"
#include "snmdp/mdp.hpp"
#include "snmdp/mdp_io.hpp"
#include "snmdp/newton.hpp"
