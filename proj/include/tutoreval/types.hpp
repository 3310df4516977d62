#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tutoreval {

// Ternary verdict label. yes/no map to +1/-1 in files and formulas;
// not_applicable marks an evaluation that was skipped because the
// filter answered no.
enum class Trilabel { yes, no, not_applicable };

enum class Stage { filter, evaluation };

enum class Errc {
  config,             // bad configuration, missing credentials, bad template
  contract,           // precondition or invariant violated by inputs
  transport,          // remote call failed after exhausting retries
  fixture_miss,       // mock provider has no fixture for a prompt digest
  unparseable,        // model response carries no answer line
  consensus_failure,  // too few valid samples, or a tied vote
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::config: return "CONFIG";
    case Errc::contract: return "CONTRACT";
    case Errc::transport: return "TRANSPORT";
    case Errc::fixture_miss: return "FIXTURE-MISS";
    case Errc::unparseable: return "UNPARSEABLE";
    case Errc::consensus_failure: return "CONSENSUS-FAILURE";
  }
  return "UNKNOWN";
}

inline int label_to_int(Trilabel l) {
  switch (l) {
    case Trilabel::yes: return +1;
    case Trilabel::no: return -1;
    case Trilabel::not_applicable: break;
  }
  throw Error(Errc::contract, "not-applicable label has no numeric encoding");
}

inline std::string label_to_string(Trilabel l) {
  switch (l) {
    case Trilabel::yes: return "yes";
    case Trilabel::no: return "no";
    case Trilabel::not_applicable: break;
  }
  return "NA";
}

inline Trilabel label_from_string(std::string_view s) {
  if (s == "yes") return Trilabel::yes;
  if (s == "no") return Trilabel::no;
  if (s == "NA") return Trilabel::not_applicable;
  throw Error(Errc::contract, "unrecognized label token '" + std::string(s) + "' (expected yes, no, or NA)");
}

inline std::string stage_name(Stage s) { return s == Stage::filter ? "filter" : "evaluation"; }

inline std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Fixed mixing primitives; seed substreams and fixture selection must not
// depend on platform hash functions.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace tutoreval
