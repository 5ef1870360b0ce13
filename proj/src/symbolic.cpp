#include "billiard/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace billiard {

bool is_admissible(const Word& w, int r) {
  for (int s : w)
    if (s < 1 || s > r)
      raise(fault::alphabet, "symbol " + std::to_string(s) + " outside alphabet {1.." +
                                 std::to_string(r) + "}");
  int n = static_cast<int>(w.size());
  if (n < 2) return false;
  for (int i = 0; i < n; ++i)
    if (w[i] == w[(i + 1) % n]) return false;
  return true;
}

Word rotate(const Word& w, int k) {
  int n = static_cast<int>(w.size());
  if (n == 0) return w;
  k = ((k % n) + n) % n;
  Word out(w.begin() + k, w.end());
  out.insert(out.end(), w.begin(), w.begin() + k);
  return out;
}

Word reverse_word(const Word& w) { return Word(w.rbegin(), w.rend()); }

Word canonical_rotation(const Word& w) {
  int n = static_cast<int>(w.size());
  Word best = w;
  for (int k = 1; k < n; ++k) {
    Word cand = rotate(w, k);
    if (cand < best) best = cand;
  }
  return best;
}

namespace {

bool is_rotation_of(const Word& a, const Word& b) {
  if (a.size() != b.size()) return false;
  return canonical_rotation(a) == canonical_rotation(b);
}

int smallest_period(const Word& w) {
  int n = static_cast<int>(w.size());
  for (int p = 1; p <= n; ++p) {
    if (n % p != 0) continue;
    bool periodic = true;
    for (int i = p; i < n && periodic; ++i)
      if (w[i] != w[i - p]) periodic = false;
    if (periodic) return p;
  }
  return n;
}

}  // namespace

CyclicClass canonicalize(const Word& w, int r) {
  if (!is_admissible(w, r))
    raise(fault::admissibility, "word " + word_to_string(w) + " is not cyclically admissible");
  CyclicClass c;
  c.canonical = canonical_rotation(w);
  int n = c.n();
  int p = smallest_period(c.canonical);
  c.mu = n / p;
  c.primitive = (c.mu == 1);
  c.root = Word(c.canonical.begin(), c.canonical.begin() + p);
  // The least rotation of a periodic word is the repeat of its root's least
  // rotation, so c.root is itself canonical.
  c.orientation = is_rotation_of(reverse_word(c.canonical), c.canonical)
                      ? Orientation::SelfReversible
                      : Orientation::Chiral;
  return c;
}

namespace {

void enumerate_length(int r, int n, std::vector<CyclicClass>& out) {
  // DFS in increasing symbol order; a canonical word starts with its minimal
  // symbol, so prune any branch using a symbol below w[0]. Lexicographic
  // emission order comes for free from the DFS order.
  Word w(n, 0);
  auto emit_if_canonical = [&]() {
    if (w[n - 1] == w[0]) return;
    if (canonical_rotation(w) != w) return;
    if (smallest_period(w) != n) return;  // primitive classes only
    CyclicClass c;
    c.canonical = w;
    c.root = w;
    c.mu = 1;
    c.primitive = true;
    c.orientation = is_rotation_of(reverse_word(w), w) ? Orientation::SelfReversible
                                                       : Orientation::Chiral;
    out.push_back(std::move(c));
  };
  auto dfs = [&](auto&& self, int pos) -> void {
    if (pos == n) {
      emit_if_canonical();
      return;
    }
    for (int s = (pos == 0 ? 1 : w[0]); s <= r; ++s) {
      if (pos > 0 && s == w[pos - 1]) continue;
      w[pos] = s;
      self(self, pos + 1);
    }
  };
  dfs(dfs, 0);
}

}  // namespace

std::vector<CyclicClass> enumerate_words(int r, int n_max) {
  if (r < 3) raise(fault::arity, "enumeration needs r >= 3, got " + std::to_string(r));
  if (n_max < 2) raise(fault::parameter, "n_max must be >= 2, got " + std::to_string(n_max));
  std::vector<CyclicClass> out;
  for (int n = 2; n <= n_max; ++n) enumerate_length(r, n, out);
  return out;
}

long long count_sequences(int r, int n) {
  if (r < 2) raise(fault::parameter, "count_sequences needs r >= 2");
  if (n < 2) raise(fault::parameter, "count_sequences needs n >= 2");
  if (n * std::log2(static_cast<double>(r - 1)) > 62.0)
    raise(fault::parameter, "count_sequences result exceeds 64-bit range");
  long long pw = 1;
  for (int i = 0; i < n; ++i) pw *= (r - 1);
  long long sign = (n % 2 == 0) ? 1 : -1;
  return pw + sign * (r - 1);
}

std::string word_to_string(const Word& w) {
  std::ostringstream os;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ',';
    os << w[i];
  }
  return os.str();
}

Word word_from_string(const std::string& text) {
  Word w;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) raise(fault::parameter, "empty symbol in word \"" + text + "\"");
    std::size_t used = 0;
    int v;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      raise(fault::parameter, "invalid symbol \"" + tok + "\" in word \"" + text + "\"");
    }
    if (used != tok.size())
      raise(fault::parameter, "invalid symbol \"" + tok + "\" in word \"" + text + "\"");
    w.push_back(v);
  }
  if (w.empty()) raise(fault::parameter, "empty word \"" + text + "\"");
  return w;
}

}  // namespace billiard
