#pragma once

#include "medrank/analysis.hpp"
#include "medrank/corpus.hpp"
#include "medrank/error.hpp"
#include "medrank/eval.hpp"
#include "medrank/index.hpp"
#include "medrank/lexfilter.hpp"
#include "medrank/pipeline.hpp"
#include "medrank/porter.hpp"
#include "medrank/scorer.hpp"
#include "medrank/significance.hpp"
#include "medrank/training.hpp"
#include "medrank/trecio.hpp"
