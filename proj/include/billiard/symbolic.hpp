#pragma once

#include "billiard/common.hpp"

#include <string>
#include <vector>

namespace billiard {

// A cyclic itinerary: 1-based obstacle indices, adjacent entries distinct
// (including the wrap-around pair).
using Word = std::vector<int>;

enum class Orientation { SelfReversible, Chiral };

struct CyclicClass {
  Word canonical;   // lexicographically least rotation
  Word root;        // primitive word whose mu-fold repeat is `canonical`
  int mu = 1;       // repetition number
  bool primitive = true;
  Orientation orientation = Orientation::Chiral;

  int n() const { return static_cast<int>(canonical.size()); }
};

// Cyclic adjacency test. Raises fault::alphabet when a symbol leaves {1..r};
// returns false (no throw) for adjacency violations or n < 2.
bool is_admissible(const Word& w, int r);

Word rotate(const Word& w, int k);
Word reverse_word(const Word& w);
// Lexicographically least rotation.
Word canonical_rotation(const Word& w);

// Full cyclic-class decomposition: canonical rotation, primitive root and
// repetition number, orientation. Raises fault::admissibility on bad input.
CyclicClass canonicalize(const Word& w, int r);

// All primitive cyclic classes with 2 <= n <= n_max, each exactly once,
// ordered by length then by canonical word. A chiral class and its reverse
// are distinct entries (oriented-ray convention); a self-reversible class
// appears once.
std::vector<CyclicClass> enumerate_words(int r, int n_max);

// Number of admissible closed sequences of length n (not cyclic classes):
// (r-1)^n + (r-1)(-1)^n, the trace of the n-th power of the complete-graph
// adjacency matrix on r vertices.
long long count_sequences(int r, int n);

// Comma-separated 1-based rendering, e.g. "1,2,3"; inverse parser.
std::string word_to_string(const Word& w);
Word word_from_string(const std::string& text);

}  // namespace billiard
