#pragma once

#include "twqp/analysis.hpp"
#include "twqp/config.hpp"
#include "twqp/error.hpp"
#include "twqp/evaluation.hpp"
#include "twqp/experiment.hpp"
#include "twqp/index.hpp"
#include "twqp/porter_stemmer.hpp"
#include "twqp/qpp.hpp"
#include "twqp/relevance_model.hpp"
#include "twqp/rerank.hpp"
#include "twqp/retrieval.hpp"
#include "twqp/synthetic.hpp"
#include "twqp/tuning.hpp"
#include "twqp/weighting.hpp"
