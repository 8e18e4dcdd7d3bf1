#pragma once

// In-memory form of one country's inputs.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/transfer.hpp"
#include "searchsurv/unsupervised.hpp"

namespace searchsurv {

struct CountryDataset {
  std::string country;
  std::map<std::string, TimeSeries> queries;
  std::optional<TimeSeries> cases;
  std::optional<TimeSeries> deaths;
  std::optional<TimeSeries> news;
  std::vector<unsupervised::SymptomCategory> categories;

  void validate() const {
    for (const auto& c : categories) {
      c.validate();
      for (const auto& q : c.member_queries)
        if (!queries.contains(q)) throw InvalidArgument("category '" + c.name + "' references unknown query '" + q + "'");
    }
    if (cases && deaths && !cases->same_span(*deaths)) throw AlignmentError("cases and deaths spans differ");
  }

  // Latest start and earliest end over every query series.
  std::pair<Date, Date> common_query_span() const {
    if (queries.empty()) throw InvalidArgument("dataset '" + country + "' has no queries");
    Date lo = queries.begin()->second.start(), hi = queries.begin()->second.end();
    for (const auto& [id, s] : queries) {
      lo = std::max(lo, s.start());
      hi = std::min(hi, s.end());
    }
    if (hi < lo) throw AlignmentError("query series of '" + country + "' do not overlap");
    return {lo, hi};
  }

  // Category name of each query (first category listing it), "" when uncategorised.
  std::string category_of(const std::string& query) const {
    for (const auto& c : categories)
      for (const auto& q : c.member_queries)
        if (q == query) return c.name;
    return "";
  }

  TimeSeries category_series(const unsupervised::SymptomCategory& c, Date from, Date to) const {
    std::vector<TimeSeries> parts;
    for (const auto& q : c.member_queries) parts.push_back(queries.at(q).slice(from, to));
    return unsupervised::aggregate_category(parts);
  }

  // Queries as a days x queries matrix over [from, to], columns in id order.
  transfer::QuerySet query_set(Date from, Date to) const {
    transfer::QuerySet qs;
    qs.start = from;
    const auto days = static_cast<Eigen::Index>((to - from).count() + 1);
    if (days < 1) throw InvalidArgument("empty query window");
    qs.data.resize(days, static_cast<Eigen::Index>(queries.size()));
    Eigen::Index j = 0;
    for (const auto& [id, s] : queries) {
      const TimeSeries part = s.slice(from, to);
      for (Eigen::Index i = 0; i < days; ++i) qs.data(i, j) = part[static_cast<std::size_t>(i)];
      qs.ids.push_back(id);
      qs.categories.push_back(category_of(id));
      ++j;
    }
    return qs;
  }
};

}  // namespace searchsurv
