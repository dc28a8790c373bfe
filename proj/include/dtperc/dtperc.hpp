#pragma once

#include "dtperc/corpus.hpp"
#include "dtperc/decision_tree.hpp"
#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/exact.hpp"
#include "dtperc/graph.hpp"
#include "dtperc/inequalities.hpp"
#include "dtperc/monte_carlo.hpp"
#include "dtperc/report.hpp"
#include "dtperc/zipper.hpp"
