#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace hopgen {

// Canonical residue order. Index into this string is the one-hot offset
// within a 20-slot position block, and the tie-break order everywhere a
// most-frequent symbol is picked.
inline constexpr std::string_view kAlphabet = "ARNDCQEGHILKMFPSTWYV";
inline constexpr int kNumResidues = 20;
inline constexpr char kGap = '-';

// Ambiguity codes replaced with '-' at parse time.
inline constexpr std::string_view kNonCanonical = "BJOUXZ";

// Residue -> index in kAlphabet, or -1 for anything else (including '-').
inline int residue_index(char c) {
    switch (c) {
        case 'A': return 0;  case 'R': return 1;  case 'N': return 2;
        case 'D': return 3;  case 'C': return 4;  case 'Q': return 5;
        case 'E': return 6;  case 'G': return 7;  case 'H': return 8;
        case 'I': return 9;  case 'L': return 10; case 'K': return 11;
        case 'M': return 12; case 'F': return 13; case 'P': return 14;
        case 'S': return 15; case 'T': return 16; case 'W': return 17;
        case 'Y': return 18; case 'V': return 19;
        default: return -1;
    }
}

inline bool is_canonical(char c) { return residue_index(c) >= 0; }

inline bool is_non_canonical_code(char c) {
    return kNonCanonical.find(c) != std::string_view::npos;
}

// Kyte-Doolittle hydropathy, indexed by residue_index.
inline constexpr std::array<double, 20> kKyteDoolittle = {
    1.8,  // A
    -4.5, // R
    -3.5, // N
    -3.5, // D
    2.5,  // C
    -3.5, // Q
    -3.5, // E
    -0.4, // G
    -3.2, // H
    4.5,  // I
    3.8,  // L
    -3.9, // K
    1.9,  // M
    2.8,  // F
    -1.6, // P
    -0.8, // S
    -0.7, // T
    -0.9, // W
    -1.3, // Y
    4.2,  // V
};

} // namespace hopgen
