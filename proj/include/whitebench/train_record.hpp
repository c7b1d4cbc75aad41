#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace wb {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One observation along a training run. `time` is the continuous flow time
/// for closed-form runs and the step index for discrete ones. NaN marks a
/// metric that was not measured.
struct TrainStep {
  long step = 0;
  double time = 0.0;
  double train_loss = kMissing;
  double train_accuracy = kMissing;
  double val_loss = kMissing;
  double test_loss = kMissing;
  double test_error = kMissing;
};

struct TrainRecord {
  std::vector<TrainStep> steps;

  // -1 when the cutoff was never reached.
  long steps_to_cutoff = -1;
  double epochs_to_cutoff = kMissing;
  std::string stopping_reason;

  // Selected point (best validation loss, or the final step when no
  // validation set is tracked).
  long best_step = -1;
  double best_time = kMissing;
  double best_val_loss = kMissing;
  double test_loss_at_best = kMissing;
  double test_error_at_best = kMissing;

  std::map<std::string, std::string> metadata;

  /// Throws InputError unless step indices stay strictly increasing.
  void push(const TrainStep& s);
  const TrainStep& last() const;
};

}  // namespace wb
