#include "tabens/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <vector>

#include "tabens/core.hpp"

namespace tabens {

namespace {

// Class sequence with exact per-class counts, shuffled.
std::vector<int> class_sequence(const std::vector<int>& counts, Rng& rng) {
  std::vector<int> seq;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    seq.insert(seq.end(), static_cast<std::size_t>(counts[c]), static_cast<int>(c));
  }
  rng.shuffle(seq);
  return seq;
}

int clamp_int(double v, int lo, int hi) {
  const int r = static_cast<int>(std::lround(v));
  return std::max(lo, std::min(hi, r));
}

double clamp(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

// Draw from a small categorical distribution (weights need not normalize).
int pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string make_dataset1_csv(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> counts{73, 658, 592, 287};  // Underweight/Normal/Overweight/Obesity
  const std::array<const char*, 4> names{"Underweight", "Normal", "Overweight", "Obesity"};
  const std::vector<int> classes = class_sequence(counts, rng);

  std::ostringstream os;
  os << "Sex,Age,Height,Overweight_Obese_Family,Consumption_of_Fast_Food,"
        "Frequency_of_Consuming_Vegetables,Number_of_Main_Meals_Daily,"
        "Food_Intake_Between_Meals,Smoking,Liquid_Intake_Daily,"
        "Calculation_of_Calorie_Intake,Physical_Excercise,"
        "Schedule_Dedicated_to_Technology,Type_of_Transportation_Used,Class\n";

  for (int b : classes) {  // b = 0 underweight .. 3 obesity
    const double level = static_cast<double>(b);

    const int sex = 1 + (rng.uniform() < 0.5 ? 0 : 1);
    // Age carries the strongest single-feature signal (the reported
    // most-important feature for this dataset).
    const int age = clamp_int(19.0 + 7.5 * level + rng.normal() * 3.4, 15, 61);
    const int height = clamp_int(168.0 + rng.normal() * 9.0 + (sex == 1 ? 3.0 : -3.0), 150, 196);

    // Two latent pathways: diet-driven or inactivity-driven. Only the active
    // pathway's features carry the class signal for a given row, so single
    // features are weak marginally and deep interactions matter.
    const bool diet_pathway = rng.uniform() < 0.5;
    const double strong = level + rng.normal() * 0.34;
    const double faint = level + rng.normal() * 1.5;

    const double diet_signal = diet_pathway ? strong : faint;
    const double move_signal = diet_pathway ? faint : strong;

    const int family = rng.uniform() < 0.2 + 0.2 * level ? 2 : 1;
    const int fast_food = diet_signal > 1.4 + rng.normal() * 0.35 ? 2 : 1;
    const int vegetables =
        clamp_int(3.2 - 0.6 * diet_signal + rng.normal() * 0.55, 1, 3);
    const int meals = clamp_int(1.0 + 0.68 * diet_signal + rng.normal() * 0.5, 1, 4);
    const int between_meals = clamp_int(1.0 + 0.64 * diet_signal + rng.normal() * 0.6, 1, 4);
    const int smoking = rng.uniform() < 0.12 + 0.02 * level ? 2 : 1;
    const int liquid = clamp_int(3.1 - 0.4 * move_signal + rng.normal() * 0.55, 1, 3);
    const int calorie_calc = rng.uniform() < 0.35 - 0.06 * level ? 2 : 1;
    const int exercise = clamp_int(4.7 - 0.95 * move_signal + rng.normal() * 0.65, 1, 5);
    const int technology = clamp_int(1.0 + 0.55 * move_signal + rng.normal() * 0.6, 1, 3);
    const int transport = clamp_int(2.0 + 0.42 * move_signal + rng.normal() * 0.95, 1, 5);

    os << sex << ',' << age << ',' << height << ',' << family << ',' << fast_food << ','
       << vegetables << ',' << meals << ',' << between_meals << ',' << smoking << ',' << liquid
       << ',' << calorie_calc << ',' << exercise << ',' << technology << ',' << transport << ','
       << names[static_cast<std::size_t>(b)] << '\n';
  }
  return os.str();
}

std::string make_dataset2_csv(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> counts{272, 287, 351, 297, 324, 290, 290};
  const std::array<const char*, 7> names{
      "Insufficient_Weight", "Normal_Weight",  "Overweight_Level_I", "Overweight_Level_II",
      "Obesity_Type_I",      "Obesity_Type_II", "Obesity_Type_III"};
  // BMI bands behind the seven labels.
  const std::array<std::pair<double, double>, 7> bmi_bands{{{14.0, 18.5},
                                                            {18.5, 24.9},
                                                            {25.0, 27.5},
                                                            {27.5, 30.0},
                                                            {30.0, 35.0},
                                                            {35.0, 40.0},
                                                            {40.0, 47.0}}};
  const std::vector<int> classes = class_sequence(counts, rng);

  std::ostringstream os;
  os << "Gender,Age,Height,Weight,family_history_with_overweight,FAVC,FCVC,NCP,"
        "CAEC,SMOKE,CH2O,SCC,FAF,TUE,CALC,MTRANS,NObeyesdad\n";

  // Per-class feature profiles. The two heaviest classes carry strongly
  // idiosyncratic lifestyle patterns (an artifact of how the source data was
  // synthesized), the middle classes blur into each other.
  struct ClassProfile {
    double p_male;
    double p_family;
    double p_favc;
    double fcvc_mean, fcvc_sd;
    double ncp_mean, ncp_sd;
    std::vector<double> caec;  // no, Sometimes, Frequently, Always
    double ch2o_mean;
    double p_scc;
    double faf_mean;
    double tue_mean;
    std::vector<double> calc;  // no, Sometimes, Frequently, Always
    std::vector<double> mtrans;
  };
  const std::array<ClassProfile, 7> profiles{{
      // Insufficient
      {0.45, 0.38, 0.52, 2.45, 0.45, 2.95, 0.62, {0.10, 0.48, 0.34, 0.08}, 1.80, 0.16, 1.55, 1.00,
       {0.38, 0.52, 0.09, 0.01}, {0.56, 0.14, 0.20, 0.03, 0.07}},
      // Normal
      {0.50, 0.48, 0.62, 2.18, 0.48, 2.75, 0.65, {0.13, 0.55, 0.25, 0.07}, 1.95, 0.16, 1.35, 0.85,
       {0.28, 0.60, 0.11, 0.01}, {0.52, 0.16, 0.22, 0.04, 0.06}},
      // Overweight I
      {0.56, 0.70, 0.78, 2.05, 0.42, 2.50, 0.60, {0.05, 0.74, 0.17, 0.04}, 2.02, 0.07, 1.12, 0.80,
       {0.25, 0.66, 0.08, 0.01}, {0.68, 0.04, 0.24, 0.02, 0.02}},
      // Overweight II
      {0.60, 0.82, 0.85, 2.12, 0.40, 2.38, 0.58, {0.03, 0.82, 0.12, 0.03}, 2.04, 0.05, 1.00, 0.76,
       {0.22, 0.69, 0.08, 0.01}, {0.71, 0.03, 0.23, 0.02, 0.01}},
      // Obesity I
      {0.55, 0.93, 0.91, 2.28, 0.38, 2.52, 0.52, {0.02, 0.92, 0.05, 0.01}, 2.08, 0.03, 0.90, 0.70,
       {0.20, 0.73, 0.07, 0.00}, {0.75, 0.02, 0.21, 0.01, 0.01}},
      // Obesity II: almost exclusively male, near-deterministic markers
      {0.985, 0.985, 0.97, 1.90, 0.30, 2.35, 0.55, {0.01, 0.97, 0.02, 0.00}, 1.95, 0.01, 1.05, 0.75,
       {0.12, 0.86, 0.02, 0.00}, {0.86, 0.01, 0.12, 0.01, 0.00}},
      // Obesity III: almost exclusively female, pinned survey answers
      {0.015, 0.995, 0.995, 2.99, 0.02, 2.95, 0.18, {0.00, 0.995, 0.005, 0.00}, 2.15, 0.005, 0.35,
       0.62, {0.08, 0.92, 0.00, 0.00}, {0.95, 0.00, 0.05, 0.00, 0.00}},
  }};

  for (int b : classes) {
    const double level = static_cast<double>(b);
    const ClassProfile& prof = profiles[static_cast<std::size_t>(b)];
    const bool male = rng.uniform() < prof.p_male;

    const double height =
        clamp(male ? 1.76 + rng.normal() * 0.035 : 1.63 + rng.normal() * 0.032, 1.45, 1.98);
    const auto [bmi_lo, bmi_hi] = bmi_bands[static_cast<std::size_t>(b)];
    // The label is a deterministic function of BMI: classes are exact bands
    // in (height, weight), as in the source data. Mass concentrates mid-band
    // (triangular draw inside an inset margin), thinning out near the
    // thresholds the way the mostly interpolated source rows do.
    const double inset = 0.22;
    const double bmi =
        bmi_lo + inset + (bmi_hi - bmi_lo - 2.0 * inset) * 0.5 * (rng.uniform() + rng.uniform());
    const double weight = clamp(bmi * height * height, 39.0, 173.0);

    const double age =
        clamp(17.0 + std::abs(rng.normal()) * 6.5 + level * 0.9 + rng.uniform() * 2.0, 14.0, 61.0);

    const int family = rng.uniform() < prof.p_family ? 1 : 0;
    const int favc = rng.uniform() < prof.p_favc ? 1 : 0;
    const double fcvc = clamp(prof.fcvc_mean + rng.normal() * prof.fcvc_sd, 1.0, 3.0);
    const double ncp = clamp(prof.ncp_mean + rng.normal() * prof.ncp_sd, 1.0, 4.0);
    const int caec = pick(rng, prof.caec);
    const int smoke = rng.uniform() < 0.03 ? 1 : 0;
    const double ch2o = clamp(prof.ch2o_mean + rng.normal() * 0.55, 1.0, 3.0);
    const int scc = rng.uniform() < prof.p_scc ? 1 : 0;
    const double faf = clamp(prof.faf_mean + rng.normal() * 0.7, 0.0, 3.0);
    const double tue = clamp(prof.tue_mean + rng.normal() * 0.55, 0.0, 2.0);
    const int calc = pick(rng, prof.calc);
    const int mtrans = pick(rng, prof.mtrans);

    static const std::array<const char*, 4> caec_names{"no", "Sometimes", "Frequently", "Always"};
    static const std::array<const char*, 4> calc_names{"no", "Sometimes", "Frequently", "Always"};
    static const std::array<const char*, 5> mtrans_names{"Public_Transportation", "Walking",
                                                         "Automobile", "Motorbike", "Bike"};

    os << (male ? "Male" : "Female") << ',' << fixed6(age) << ',' << fixed6(height) << ','
       << fixed6(weight) << ',' << (family ? "yes" : "no") << ',' << (favc ? "yes" : "no") << ','
       << fixed6(fcvc) << ',' << fixed6(ncp) << ',' << caec_names[static_cast<std::size_t>(caec)]
       << ',' << (smoke ? "yes" : "no") << ',' << fixed6(ch2o) << ',' << (scc ? "yes" : "no")
       << ',' << fixed6(faf) << ',' << fixed6(tue) << ','
       << calc_names[static_cast<std::size_t>(calc)] << ','
       << mtrans_names[static_cast<std::size_t>(mtrans)] << ','
       << names[static_cast<std::size_t>(b)] << '\n';
  }
  return os.str();
}

}  // namespace tabens
