#pragma once

#include <string>
#include <vector>

#include "pursuitlab/config.hpp"

namespace pursuitlab {

inline constexpr int kVocabSize = 16;

// Closed token alphabet shared by every textual action. Word -> id is a
// bijection; out-of-vocabulary words are an error, never a fallback id.
class Vocabulary {
 public:
  static const Vocabulary& instance();

  int size() const { return static_cast<int>(words_.size()); }
  int id(const std::string& word) const;  // throws DomainError on OOV
  const std::string& word(int id) const;

 private:
  Vocabulary();
  std::vector<std::string> words_;
};

// Split on single spaces and map every word through the vocabulary.
std::vector<int> tokenize(const std::string& surface);

struct CandidateAction {
  std::string surface;
  std::vector<int> tokens;
  int length() const { return static_cast<int>(tokens.size()); }
};

// The per-step candidate set A_t. Canonical, stable ordering:
//   direction: hard left, soft left, hold heading, soft right, hard right
//   distance:  speed up, slow down, hold speed
//   integrated: direction-major Cartesian product, joined with " and ".
struct CandidateSet {
  TaskKind task;
  std::vector<CandidateAction> actions;
  int size() const { return static_cast<int>(actions.size()); }
};

const CandidateSet& candidate_set(TaskKind task);

}  // namespace pursuitlab
