#pragma once

#include "dse2qa/analysis.hpp"
#include "dse2qa/annotation.hpp"
#include "dse2qa/config.hpp"
#include "dse2qa/core.hpp"
#include "dse2qa/corpus.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/evaluation.hpp"
#include "dse2qa/io.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/models/model.hpp"
#include "dse2qa/models/train.hpp"
#include "dse2qa/models/vocab.hpp"
#include "dse2qa/nn/autograd.hpp"
#include "dse2qa/nn/layers.hpp"
#include "dse2qa/nn/optim.hpp"
#include "dse2qa/pipeline.hpp"
#include "dse2qa/random.hpp"
#include "dse2qa/synthetic.hpp"
#include "dse2qa/text.hpp"
