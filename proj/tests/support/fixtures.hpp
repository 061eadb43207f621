#pragma once

#include <string>

#include "psdg/grammar.hpp"
#include "psdg/grammar_io.hpp"

namespace psdg::testing {

inline std::string data_path(const std::string& name) { return std::string(PSDG_DATA_DIR) + "/" + name; }

inline const Psdg& traffic() {
  static const Psdg g = load_grammar_file(data_path("traffic.psdg"));
  return g;
}

// One state; S -> a (0.3) | b (0.7).
inline constexpr const char* kSingleState = R"(
feature F { values: only }
terminals a, b
start S
prod 0: S -> a { default: 0.3 }
prod 1: S -> b { default: 0.7 }
)";

// Three state-independent expansions of S under a binary, flipping feature.
inline constexpr const char* kConstantToy = R"(
feature F { values: lo, hi ; prior: 0.4, 0.6 ; parents: F ; cpt: lo | * -> 0.7, 0.3 ; hi | * -> 0.2, 0.8 }
terminals a, b, c
start S
prod 0: S -> a { default: 0.2 }
prod 1: S -> b { default: 0.3 }
prod 2: S -> c { default: 0.5 }
)";

// Traffic structure with every choice forced by the Done feature: Drive
// expands to Pass Drive, Pass to Left Right, and the Right step sets Done so
// the tail Drive becomes Exit.
inline constexpr const char* kForcedDrive = R"(
feature Done {
  values: no, yes ;
  prior: 1, 0 ;
  parents: Done ;
  cpt: no | Right -> 0, 1 ;
       no | * -> 1, 0 ;
       yes | * -> 0, 1
}
terminals Left, Right, Exit
start Drive
prod 3: Drive -> Pass Drive { rule Done in {no} : 1 ; default: 0 }
prod 4: Drive -> Exit { rule Done in {yes} : 1 ; default: 0 }
prod 5: Pass -> Left Right { default: 1 }
)";

// Two persistent binary features: identity dynamics, uniform prior.
inline constexpr const char* kIdentity = R"(
feature A { values: a0, a1 }
feature B { values: b0, b1 }
terminals x, y
start S
prod 0: S -> x S { default: 0.5 }
prod 1: S -> y { default: 0.5 }
)";

// Pass at level 2 with p5 = p6 = 0.5 and terminal-dependent dynamics.
inline constexpr const char* kPassMix = R"(
feature Lane {
  values: left, center, right ;
  parents: Lane ;
  cpt: left | Left -> 1, 0, 0 ;
       center | Left -> 0.8, 0.2, 0 ;
       right | Left -> 0, 0.8, 0.2 ;
       left | Right -> 0.2, 0.8, 0 ;
       center | Right -> 0, 0.2, 0.8 ;
       right | Right -> 0, 0, 1
}
terminals Left, Right
start Drive
prod 0: Drive -> Pass { default: 1 }
prod 1: Pass -> Left Right { default: 0.5 }
prod 2: Pass -> Right Left { default: 0.5 }
)";

}  // namespace psdg::testing
