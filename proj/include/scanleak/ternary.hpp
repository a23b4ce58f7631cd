#pragma once

#include <cstdint>

// Three-valued logic with an explicit "unknown" (X). Gate outputs are known
// exactly when the known inputs force them: AND with a known 0 is 0 even if
// the other input is X, XOR needs both inputs known, and so on. This is the
// value domain used when scan cells hold contents the attacker cannot set.

namespace scanleak {

enum class Ternary : std::uint8_t { F = 0, T = 1, X = 2 };

constexpr Ternary t_from_bool(bool b) { return b ? Ternary::T : Ternary::F; }

constexpr bool t_known(Ternary a) { return a != Ternary::X; }

constexpr Ternary t_not(Ternary a) {
    if (a == Ternary::X) return Ternary::X;
    return a == Ternary::T ? Ternary::F : Ternary::T;
}

constexpr Ternary t_and(Ternary a, Ternary b) {
    if (a == Ternary::F || b == Ternary::F) return Ternary::F;
    if (a == Ternary::T && b == Ternary::T) return Ternary::T;
    return Ternary::X;
}

constexpr Ternary t_or(Ternary a, Ternary b) {
    if (a == Ternary::T || b == Ternary::T) return Ternary::T;
    if (a == Ternary::F && b == Ternary::F) return Ternary::F;
    return Ternary::X;
}

constexpr Ternary t_xor(Ternary a, Ternary b) {
    if (a == Ternary::X || b == Ternary::X) return Ternary::X;
    return t_from_bool(a != b);
}

constexpr char t_char(Ternary a) {
    return a == Ternary::F ? '0' : (a == Ternary::T ? '1' : 'X');
}

} // namespace scanleak
