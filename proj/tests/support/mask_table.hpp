#pragma once

#include <iterator>

namespace testing {

struct MaskCase {
  const char* in;
  const char* out;
};

// Hand-labeled. Each expected value was written out by reading the input,
// not by running either implementation.
constexpr MaskCase kMaskTable[] = {
    {"p<0.05).", "p<NUM>)."},
    {"10,000 samples", "<NUM> samples"},
    {"we studied 12 patients.", "we studied <NUM> patients."},
    {"no digits here", "no digits here"},
    {"", ""},
    {"7", "<NUM>"},
    {"(n=24)", "(n=<NUM>)"},
    {"3.5-fold", "<NUM>-fold"},
    {"il-6", "il-<NUM>"},
    {"covid-19.", "covid-<NUM>."},
    {"1998-2004", "<NUM>"},
    {"50%", "<NUM>%"},
    {"-0.25", "-<NUM>"},
    {"+3", "+<NUM>"},
    {"1e-5", "<NUM>"},
    {"e.g. 5", "e.g. <NUM>"},
    {"[12]", "[<NUM>]"},
    {"[1,2,3]", "[<NUM>]"},
    {"ca2+", "ca<NUM>+"},
    {"h2o", "h<NUM>o"},
    {"co2-rich", "co<NUM>-rich"},
    {"a1b2c", "a<NUM>c"},
    {"figure 3a", "figure <NUM>a"},
    {"5-ht1a", "<NUM>a"},
    {"two  spaces 4", "two  spaces <NUM>"},
    {"tab\t8\tend", "tab\t<NUM>\tend"},
    {"line\n9\n", "line\n<NUM>\n"},
    {" 1 ", " <NUM> "},
    {"\r\n42\r\n", "\r\n<NUM>\r\n"},
    {"µ2", "µ<NUM>"},
    {"5µm", "<NUM>µm"},
    {"β2-adrenergic", "β<NUM>-adrenergic"},
    {"١٢٣", "١٢٣"},
    {"３", "３"},
    {"<NUM>", "<NUM>"},
    {"<NUM>1", "<NUM><NUM>"},
    {"<<5", "<<NUM>"},
    {"p<=0.01", "p<=<NUM>"},
    {"(p<.001)", "(p<.<NUM>)"},
    {"3.", "<NUM>."},
    {".3", ".<NUM>"},
    {"12:30", "<NUM>"},
    {"1/2", "<NUM>"},
    {"n-3 pufa", "n-<NUM> pufa"},
    {"v1 v2 v3", "v<NUM> v<NUM> v<NUM>"},
    {"0", "<NUM>"},
    {"9999999999999999999999", "<NUM>"},
    {"1st", "<NUM>st"},
    {"(2019)", "(<NUM>)"},
    {"r²=0.8", "r²=<NUM>"},
};

static_assert(std::size(kMaskTable) == 50);

}  // namespace testing
