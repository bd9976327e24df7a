// Aligns the d1 synthetic domain onto d2 three ways and scores each with 1-NN.

#include <iostream>

#include "qcoral/qcoral.hpp"

using namespace qcoral;

int main(int argc, char** argv) {
  const unsigned long long seed = argc > 1 ? std::stoull(argv[1]) : 1;
  const DataMatrix xs = generate_synthetic(default_spec(DatasetKind::d1, seed));
  const DataMatrix xt = generate_synthetic(default_spec(DatasetKind::d2, seed + 1000));

  // No adaptation.
  std::cout << "na      " << knn_predict(xs, xt).accuracy << '\n';

  // Classical whitening and recoloring.
  DataMatrix coral = apply_coral(fit_coral(xs, xt), xs);
  for (Index i = 0; i < coral.samples(); ++i) coral.values.col(i).normalize();
  std::cout << "coral   " << knn_predict(coral, xt).accuracy << '\n';

  // Variational end-to-end alignment on 2 qubits, 8 layers.
  auto density = [](const DataMatrix& x) {
    const Matrix c = covariance(x);
    return qsim::DensityMatrix::from_real(c / c.trace());
  };
  const qsim::AnsatzCircuit circuit(2, 8);
  OptimizerConfig opt;
  opt.seed = seed;
  const TrainingTrace trace = vq::train_end_to_end(circuit, density(xs), density(xt), opt);
  const DataMatrix aligned = vq::apply_trained_transform(circuit, trace.final_parameters, xs);
  std::cout << "vq_e2e  " << knn_predict(aligned, xt).accuracy << "  (cost " << trace.initial_cost() << " -> "
            << trace.final_cost << ")\n";
}
