// Transcribed cell for cell from the published benchmark tables.
// data/*.csv must stay byte-identical to these strings.

#include "bundled_text.hpp"

namespace evoens::bundled_text {

const std::string_view mc30 = R"csv(id,response,x0,x1,x2,x3,x4
UC1,1.000,0.921,0.642,0.642,0.993,0.873
UC2,0.980,0.818,0.462,0.462,0.863,0.805
UC3,0.980,0.899,0.607,0.605,0.922,0.856
UC4,0.959,0.936,0.678,0.680,1.000,0.886
UC5,0.944,0.860,0.525,0.526,0.916,0.830
UC6,0.921,0.558,0.165,0.170,0.577,0.688
UC7,0.893,0.839,0.488,0.491,0.893,0.817
UC8,0.872,0.855,0.507,0.512,0.926,0.826
UC9,0.793,0.824,0.471,0.465,0.886,0.808
UC10,0.786,0.615,0.216,0.208,0.665,0.711
UC11,0.778,0.512,0.124,0.125,0.533,0.671
UC12,0.758,0.679,0.296,0.291,0.704,0.738
UC13,0.753,0.842,0.494,0.492,0.907,0.818
UC14,0.719,0.621,0.230,0.222,0.658,0.713
UC15,0.423,0.685,0.294,0.291,0.725,0.740
UC16,0.429,0.641,0.238,0.242,0.680,0.721
UC17,0.296,0.530,0.141,0.138,0.556,0.678
UC18,0.281,0.523,0.120,0.127,0.554,0.675
UC19,0.242,0.712,0.310,0.313,0.776,0.752
UC20,0.227,0.479,0.079,0.084,0.512,0.659
UC21,0.222,0.693,0.307,0.307,0.719,0.744
UC22,0.214,0.672,0.285,0.270,0.724,0.735
UC23,0.161,0.626,0.241,0.219,0.677,0.715
UC24,0.140,0.487,0.079,0.100,0.509,0.662
UC25,0.107,0.476,0.089,0.085,0.504,0.658
UC26,0.107,0.560,0.166,0.161,0.595,0.689
UC27,0.033,0.534,0.147,0.131,0.573,0.679
UC28,0.028,0.492,0.134,0.106,0.512,0.664
UC29,0.020,0.645,0.246,0.254,0.670,0.723
UC30,0.002,0.384,0.000,0.000,0.413,0.625
)csv";

const std::string_view geresid50 = R"csv(id,response,x0,x1,x2,x3,x4
UC1,0.017,0.320,0.046,0.133,0.373,0.604
UC2,0.021,0.275,0.054,0.109,0.316,0.589
UC3,0.031,0.391,0.139,0.193,0.440,0.628
UC4,0.050,0.450,0.160,0.220,0.525,0.649
UC5,0.052,0.174,0.000,0.050,0.200,0.556
UC6,0.058,0.544,0.238,0.300,0.616,0.683
UC7,0.072,0.354,0.089,0.160,0.408,0.615
UC8,0.081,0.563,0.260,0.310,0.646,0.690
UC9,0.085,0.240,0.015,0.080,0.281,0.577
UC10,0.094,0.233,0.025,0.088,0.267,0.575
UC11,0.109,0.152,0.000,0.023,0.181,0.549
UC12,0.124,0.377,0.098,0.164,0.446,0.623
UC13,0.139,0.394,0.133,0.181,0.460,0.629
UC14,0.149,0.477,0.163,0.228,0.571,0.658
UC15,0.154,0.497,0.207,0.258,0.574,0.666
UC16,0.161,0.683,0.374,0.428,0.742,0.739
UC17,0.204,0.368,0.099,0.164,0.428,0.620
UC18,0.210,0.606,0.299,0.354,0.677,0.707
UC19,0.217,0.456,0.185,0.234,0.519,0.651
UC20,0.235,0.366,0.121,0.176,0.414,0.619
UC21,0.269,0.634,0.310,0.359,0.749,0.719
UC22,0.273,0.319,0.095,0.139,0.365,0.603
UC23,0.290,0.510,0.204,0.271,0.582,0.670
UC24,0.328,0.603,0.279,0.339,0.700,0.706
UC25,0.369,0.413,0.122,0.184,0.493,0.635
UC26,0.389,0.506,0.200,0.256,0.597,0.669
UC27,0.391,0.768,0.456,0.497,0.883,0.779
UC28,0.399,0.676,0.356,0.404,0.782,0.736
UC29,0.417,0.669,0.348,0.395,0.776,0.733
UC30,0.438,0.501,0.197,0.255,0.587,0.667
UC31,0.490,0.639,0.315,0.369,0.740,0.720
UC32,0.514,0.427,0.136,0.206,0.495,0.640
UC33,0.535,0.497,0.191,0.259,0.571,0.666
UC34,0.557,0.492,0.174,0.236,0.594,0.664
UC35,0.594,0.800,0.500,0.534,0.915,0.795
UC36,0.611,0.561,0.243,0.309,0.641,0.689
UC37,0.617,0.753,0.444,0.480,0.868,0.771
UC38,0.621,0.713,0.400,0.442,0.815,0.753
UC39,0.645,0.532,0.230,0.284,0.614,0.679
UC40,0.650,0.665,0.354,0.400,0.750,0.731
UC41,0.668,0.574,0.256,0.317,0.665,0.695
UC42,0.748,0.920,0.682,0.706,1.053,0.872
UC43,0.762,0.704,0.385,0.426,0.826,0.749
UC44,0.764,0.631,0.330,0.372,0.710,0.717
UC45,0.764,0.726,0.399,0.449,0.848,0.759
UC46,0.769,0.658,0.333,0.391,0.751,0.729
UC47,0.781,0.572,0.248,0.312,0.666,0.694
UC48,0.811,0.651,0.322,0.382,0.750,0.726
UC49,0.873,0.751,0.425,0.475,0.876,0.770
UC50,0.904,0.866,0.588,0.617,1.000,0.834
)csv";

// grammars/*.bnf must stay byte-identical to these strings.
const std::string_view ensemble_grammar = R"bnf(# Aggregation formulas over five similarity-score columns x[:,0]..x[:,4].
# Production order is significant: codon mod rule-count picks the expansion.
<expr>  ::=  <expr>+<expr> |
             <expr>-<expr> |
             <expr>*<expr> |
             pdiv(<expr>,<expr>) |
             psqrt(<expr>) |
             np.sin(<expr>) |
             np.tanh(<expr>) |
             np.exp(<expr>) |
             plog(<expr>) |
             x[:,0] | x[:,1] | x[:,2] | x[:,3] | x[:,4] |
             <c><c>.<c><c>

<c>     ::= 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9
)bnf";

const std::string_view ensemble_interp_grammar = R"bnf(# Interpretable variant: no exp, log or sqrt, so formulas stay short and readable.
<expr>  ::=  <expr>+<expr> |
             <expr>-<expr> |
             <expr>*<expr> |
             pdiv(<expr>,<expr>) |
             np.sin(<expr>) |
             np.tanh(<expr>) |
             x[:,0] | x[:,1] | x[:,2] | x[:,3] | x[:,4] |
             <c><c>.<c><c>

<c>     ::= 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9
)bnf";

} // namespace evoens::bundled_text
