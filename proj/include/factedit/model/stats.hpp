#pragma once

#include <cstddef>

namespace factedit {

struct TeacherStats {
  double loss = 0.0;
  std::size_t actions = 0;
  std::size_t correct = 0;  // argmax action == gold action

  double accuracy() const { return actions ? static_cast<double>(correct) / static_cast<double>(actions) : 1.0; }
  TeacherStats& operator+=(const TeacherStats& o) {
    loss += o.loss;
    actions += o.actions;
    correct += o.correct;
    return *this;
  }
};

}  // namespace factedit
