#include "whitebench/train_record.hpp"

#include "whitebench/errors.hpp"

namespace wb {

void TrainRecord::push(const TrainStep& s) {
  if (!steps.empty() && s.step <= steps.back().step) {
    throw InputError("train record step indices must increase strictly");
  }
  steps.push_back(s);
}

const TrainStep& TrainRecord::last() const {
  if (steps.empty()) throw InputError("empty train record");
  return steps.back();
}

}  // namespace wb
