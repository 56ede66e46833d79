#pragma once

#include "factedit/core.hpp"
#include "factedit/datagen.hpp"
#include "factedit/engine.hpp"
#include "factedit/io.hpp"
#include "factedit/lcs.hpp"
#include "factedit/metrics.hpp"
#include "factedit/model/checkpoint.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/gradcheck.hpp"
#include "factedit/model/throughput.hpp"
#include "factedit/model/trainer.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/oracle.hpp"
#include "factedit/parallel.hpp"
#include "factedit/synthetic.hpp"
