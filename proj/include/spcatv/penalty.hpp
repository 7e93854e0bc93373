#pragma once

namespace spcatv {

// lambda_1 (l1), lambda_2 (ridge) and lambda (total variation).
struct PenaltyWeights {
  double l1 = 0.0;
  double l2 = 1.0;
  double tv = 0.0;

  // Global weight split into l1 / tv / remaining-ridge ratios:
  // l1 = g * l1_ratio, tv = g * tv_ratio, l2 = g * (1 - l1_ratio - tv_ratio).
  static PenaltyWeights from_ratios(double global_weight, double l1_ratio, double tv_ratio);

  struct Ratios {
    double global_weight;
    double l1_ratio;
    double tv_ratio;
  };
  Ratios to_ratios() const;

  // Throws std::invalid_argument unless l1 >= 0, tv >= 0 and l2 > 0.
  void validate() const;

  // Weights of the problem once every penalty is divided by lambda_2.
  double l1_scaled() const { return l1 / l2; }
  double tv_scaled() const { return tv / l2; }

  friend bool operator==(const PenaltyWeights&, const PenaltyWeights&) = default;
};

}  // namespace spcatv
