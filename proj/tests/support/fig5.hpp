#pragma once

// The example document sentence used to illustrate syntax-aware jumps, with a
// hand-written parse (the original figure is not available as text).
namespace fig5 {

inline constexpr const char* kTokens =
    "Connecting Point Systems tripled it 's sales of Apple Macintosh systems since last January .";

inline constexpr const char* kParse =
    "(S (NP (NNP Connecting) (NNP Point) (NNPS Systems)) "
    "(VP (VBD tripled) (NP (PRP it) (POS 's) (NNS sales) (PP (IN of) (NP (NNP Apple) (NNP Macintosh) (NNS systems)))) "
    "(ADVP (RB since)) (NP (JJ last) (NNP January))) (. .))";

}  // namespace fig5
