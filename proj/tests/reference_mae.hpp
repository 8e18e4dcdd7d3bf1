#pragma once

// Reported mean absolute errors of daily-deaths forecasts for eight countries.
// Columns: 7-day AR-F, SAR-F, PER-F, then 14-day AR-F, SAR-F, PER-F.

#include <vector>

namespace searchsurv::reference {

inline std::vector<std::vector<double>> country_mae_table() {
  return {
      {206.08, 128.37, 137.89, 370.25, 174.77, 227.46},   // UK
      {774.49, 545.97, 545.06, 1049.07, 591.55, 613.66},  // US
      {1.48, 0.92, 0.97, 1.14, 0.94, 1.66},               // AU
      {74.61, 55.00, 33.89, 108.48, 82.36, 52.86},        // CA
      {1.76, 1.43, 1.97, 2.14, 1.40, 1.86},               // GR
      {207.21, 85.77, 85.69, 308.99, 162.03, 157.86},     // IT
      {354.49, 193.81, 151.54, 384.38, 245.85, 282.03},   // FR
      {6.92, 7.33, 6.14, 9.14, 8.96, 7.68},               // ZA
  };
}

// Reported normalised column means, same column order.
inline std::vector<double> country_mae_normalized_mean() { return {0.294, 0.198, 0.187, 0.382, 0.253, 0.266}; }

}  // namespace searchsurv::reference
