#pragma once

#include "qcoral/errors.hpp"
#include "qcoral/linalg.hpp"
#include "qcoral/coral.hpp"
#include "qcoral/qsim.hpp"
#include "qcoral/qblas.hpp"
#include "qcoral/optim.hpp"
#include "qcoral/vqcoral.hpp"
#include "qcoral/datasets.hpp"
#include "qcoral/classify.hpp"
#include "qcoral/experiment.hpp"
