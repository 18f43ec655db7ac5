#include "pursuitlab/vocab.hpp"

#include <unordered_map>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

const std::unordered_map<std::string, int>& word_index() {
  static const std::unordered_map<std::string, int>* index = [] {
    auto* m = new std::unordered_map<std::string, int>;
    const Vocabulary& v = Vocabulary::instance();
    for (int i = 0; i < v.size(); ++i) (*m)[v.word(i)] = i;
    return m;
  }();
  return *index;
}

CandidateSet build_candidates(TaskKind task) {
  static const std::vector<std::string> kDirection = {
      "turn hard left", "turn soft left", "hold heading", "turn soft right", "turn hard right"};
  static const std::vector<std::string> kDistance = {"speed up", "slow down", "hold speed"};

  CandidateSet set;
  set.task = task;
  std::vector<std::string> surfaces;
  switch (task) {
    case TaskKind::direction: surfaces = kDirection; break;
    case TaskKind::distance: surfaces = kDistance; break;
    case TaskKind::integrated:
      for (const auto& d : kDirection)
        for (const auto& v : kDistance) surfaces.push_back(d + " and " + v);
      break;
  }
  for (const auto& s : surfaces) set.actions.push_back({s, tokenize(s)});
  return set;
}

}  // namespace

Vocabulary::Vocabulary()
    : words_{"turn", "left",  "right", "hard", "soft",  "hold",  "heading", "speed",
             "up",   "down",  "slow",  "and",  "red",   "green", "blue",    "yellow"} {}

const Vocabulary& Vocabulary::instance() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::id(const std::string& word) const {
  auto it = word_index().find(word);
  if (it == word_index().end())
    throw DomainError("word '" + word + "' is not in the vocabulary");
  return it->second;
}

const std::string& Vocabulary::word(int id) const { return words_.at(id); }

std::vector<int> tokenize(const std::string& surface) {
  std::vector<int> ids;
  std::string word;
  const Vocabulary& v = Vocabulary::instance();
  auto flush = [&] {
    if (!word.empty()) {
      ids.push_back(v.id(word));
      word.clear();
    }
  };
  for (char c : surface) {
    if (c == ' ') {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  return ids;
}

const CandidateSet& candidate_set(TaskKind task) {
  static const CandidateSet dir = build_candidates(TaskKind::direction);
  static const CandidateSet dist = build_candidates(TaskKind::distance);
  static const CandidateSet integrated = build_candidates(TaskKind::integrated);
  switch (task) {
    case TaskKind::direction: return dir;
    case TaskKind::distance: return dist;
    case TaskKind::integrated: return integrated;
  }
  return dir;
}

}  // namespace pursuitlab
