#include <gtest/gtest.h>

#include <random>

#include "searchsurv/io.hpp"
#include "searchsurv/synthetic.hpp"
#include "test_util.hpp"

using namespace searchsurv;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("searchsurv_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  fs::path write(const std::string& name, const std::string& text) const {
    io::write_file_atomic(path_ / name, text);
    return path_ / name;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Line number carried by the IngestionError thrown by f, or 0.
template <class F>
std::size_t failing_line(F&& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const IngestionError& e) {
    if (message) *message = e.what();
    return e.line();
  }
  ADD_FAILURE() << "expected an ingestion error";
  return 0;
}

}  // namespace

TEST(QueryFrequencies, TwoRows) {
  TempDir tmp;
  const auto p = tmp.write("q.csv", "date,query,frequency\n2020-03-01,fever,0.5\n2020-03-02,fever,0.25\n");
  const auto m = io::load_query_frequencies(p);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at("fever").size(), 2u);
  EXPECT_EQ(m.at("fever").start(), make_date(2020, 3, 1));
  EXPECT_EQ(m.at("fever")[1], 0.25);
}

TEST(QueryFrequencies, UnorderedRowsAndSeveralQueries) {
  TempDir tmp;
  const auto p = tmp.write("q.csv",
                           "date,query,frequency\n2020-03-02,b,2\n2020-03-01,a,1\n\n2020-03-01,b,3\r\n2020-03-02,a,4\n");
  const auto m = io::load_query_frequencies(p);
  EXPECT_EQ(m.at("a").data(), (std::vector<double>{1, 4}));
  EXPECT_EQ(m.at("b").data(), (std::vector<double>{3, 2}));
}

TEST(QueryFrequencies, GapCitesMissingDate) {
  TempDir tmp;
  const auto p = tmp.write("q.csv", "date,query,frequency\n2020-03-01,fever,1\n2020-03-02,fever,1\n2020-03-04,fever,1\n");
  std::string msg;
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(p); }, &msg), 4u);
  EXPECT_NE(msg.find("2020-03-03"), std::string::npos) << msg;
}

TEST(QueryFrequencies, RejectsBadRows) {
  TempDir tmp;
  EXPECT_EQ(failing_line([&] {
              io::load_query_frequencies(tmp.write("a.csv", "date,query,frequency\n2020-03-01,f,1\n2020-03-02,f,-0.1\n"));
            }),
            3u);
  std::string msg;
  EXPECT_EQ(failing_line([&] {
              io::load_query_frequencies(tmp.write("b.csv", "date,query,frequency\n2020-03-01,f,1\n2020-03-01,f,2\n"));
            }, &msg),
            3u);
  EXPECT_NE(msg.find("duplicate"), std::string::npos);
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(tmp.write("c.csv", "date,query,frequency\n2020-03-01,f,x\n")); }), 2u);
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(tmp.write("d.csv", "date,query,frequency\n2020-3-1,f,1\n")); }), 2u);
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(tmp.write("e.csv", "date,query,frequency\n2020-03-01,f\n")); }), 2u);
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(tmp.write("f.csv", "day,query,frequency\n2020-03-01,f,1\n")); }), 1u);
  EXPECT_EQ(failing_line([&] { io::load_query_frequencies(tmp.write("g.csv", "date,query,frequency\n2020-03-01,f,nan\n")); }), 2u);
  EXPECT_THROW(io::load_query_frequencies(tmp.path() / "absent.csv"), IngestionError);
  EXPECT_THROW(io::load_query_frequencies(tmp.write("h.csv", "date,query,frequency\n")), IngestionError);
}

TEST(Clinical, SingleCountry) {
  TempDir tmp;
  const auto p = tmp.write("c.csv", "date,country,cases,deaths\n2020-03-01,IT,5,0\n2020-03-02,IT,7,1\n2020-03-03,IT,9,2\n");
  const auto c = io::load_clinical(p, "IT");
  EXPECT_EQ(c.cases.data(), (std::vector<double>{5, 7, 9}));
  EXPECT_EQ(c.deaths.data(), (std::vector<double>{0, 1, 2}));
}

TEST(Clinical, MixedCountriesFiltered) {
  TempDir tmp;
  const auto p = tmp.write("c.csv",
                           "date,country,cases,deaths\n2020-03-01,IT,5,0\n2020-03-01,GR,1,0\n2020-03-02,IT,7,1\n2020-03-02,GR,2,1\n");
  const auto gr = io::load_clinical(p, "GR");
  EXPECT_EQ(gr.cases.data(), (std::vector<double>{1, 2}));
  EXPECT_EQ(io::load_clinical(p).size(), 2u);
  EXPECT_THROW(io::load_clinical(p, "FR"), IngestionError);
}

TEST(Clinical, RejectsNonIntegers) {
  TempDir tmp;
  EXPECT_EQ(failing_line([&] { io::load_clinical(tmp.write("a.csv", "date,country,cases,deaths\n2020-03-01,IT,1.5,0\n")); }), 2u);
  EXPECT_EQ(failing_line([&] { io::load_clinical(tmp.write("b.csv", "date,country,cases,deaths\n2020-03-01,IT,1,-1\n")); }), 2u);
  EXPECT_EQ(failing_line([&] {
              io::load_clinical(tmp.write("c.csv", "date,country,cases,deaths\n2020-03-01,IT,1,0\n2020-03-03,IT,1,0\n"));
            }),
            3u);
}

TEST(NewsRatio, Examples) {
  TempDir tmp;
  const auto ones = io::load_news_ratio(tmp.write("a.csv", "date,matched,total\n2020-03-01,10,10\n2020-03-02,0,7\n"));
  EXPECT_EQ(ones.data(), (std::vector<double>{1.0, 0.0}));

  std::string text = "date,matched,total\n";
  for (int d = 1; d <= 5; ++d) text += "2020-03-0" + std::to_string(d) + ",2535735,10093349\n";
  const auto r = io::load_news_ratio(tmp.write("b.csv", text));
  ASSERT_EQ(r.size(), 5u);
  for (double v : r.values()) {
    EXPECT_EQ(v, r[0]);
    EXPECT_NEAR(v, 0.2512, 5e-5);
  }
  EXPECT_EQ(failing_line([&] { io::load_news_ratio(tmp.write("c.csv", "date,matched,total\n2020-03-01,11,10\n")); }), 2u);
  EXPECT_EQ(failing_line([&] { io::load_news_ratio(tmp.write("d.csv", "date,matched,total\n2020-03-01,0,0\n")); }), 2u);
}

TEST(Categories, LoadAndValidate) {
  TempDir tmp;
  const auto p = tmp.write("k.csv", "category,weight,query\nfever,0.601,fever\nfever,0.601,high temperature\n"
                                    "covid terms,1,covid\n\"sore, throat\",0.386,sore throat\n");
  const auto cats = io::load_categories(p);
  ASSERT_EQ(cats.size(), 3u);
  EXPECT_EQ(cats[0].member_queries, (std::vector<std::string>{"fever", "high temperature"}));
  EXPECT_TRUE(cats[1].covid_terms);
  EXPECT_FALSE(cats[0].covid_terms);
  EXPECT_EQ(cats[2].name, "sore, throat");
  EXPECT_EQ(failing_line([&] { io::load_categories(tmp.write("a.csv", "category,weight,query\nf,0.5,a\nf,0.6,b\n")); }), 3u);
  EXPECT_EQ(failing_line([&] { io::load_categories(tmp.write("b.csv", "category,weight,query\nf,0.5,a\nf,0.5,a\n")); }), 3u);
  EXPECT_THROW(io::load_categories(tmp.write("c.csv", "category,weight,query\nf,1.5,a\n")), IngestionError);
  EXPECT_THROW(io::load_categories(tmp.write("d.csv", "category,weight,query\ncovid terms,0.5,a\n")), IngestionError);
}

TEST(RoundTrip, SyntheticDatasetReloadsEqual) {
  TempDir tmp;
  synth::SyntheticScenario sc;
  sc.seed = 17;
  sc.current_days = 60;
  sc.history_start = make_date(2018, 9, 17);
  const auto ds = synth::generate_synthetic(sc).data;

  const auto qp = tmp.write("q.csv", io::query_frequencies_csv(ds.queries));
  EXPECT_EQ(io::load_query_frequencies(qp), ds.queries);
  const auto cp = tmp.write("c.csv", io::clinical_csv({{ds.country, {*ds.cases, *ds.deaths}}}));
  const auto clin = io::load_clinical(cp, ds.country);
  EXPECT_EQ(clin.cases, *ds.cases);
  EXPECT_EQ(clin.deaths, *ds.deaths);
  const auto kp = tmp.write("k.csv", io::categories_csv(ds.categories));
  const auto cats = io::load_categories(kp);
  ASSERT_EQ(cats.size(), ds.categories.size());
  for (std::size_t i = 0; i < cats.size(); ++i) {
    EXPECT_EQ(cats[i].name, ds.categories[i].name);
    EXPECT_EQ(cats[i].weight, ds.categories[i].weight);
    EXPECT_EQ(cats[i].member_queries, ds.categories[i].member_queries);
    EXPECT_EQ(cats[i].covid_terms, ds.categories[i].covid_terms);
  }

  const auto counts = io::news_counts_from_ratio(*ds.news);
  const auto np = tmp.write("n.csv", io::news_counts_csv(counts));
  const auto back = io::load_news_counts(np);
  EXPECT_EQ(back.matched, counts.matched);
  EXPECT_EQ(back.total, counts.total);
  const auto ratio = io::load_news_ratio(np);
  for (std::size_t i = 0; i < ratio.size(); ++i) EXPECT_NEAR(ratio[i], (*ds.news)[i], 5e-7);

  // Loaded values emit to the same bytes.
  EXPECT_EQ(io::query_frequencies_csv(io::load_query_frequencies(qp)), io::read_file(qp));
  EXPECT_EQ(io::news_counts_csv(back), io::read_file(np));
}

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < 2000; ++i) {
    for (double v : {u(rng), e(rng) * 1e-12, e(rng) * 1e200}) {
      const auto s = io::format_number(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      EXPECT_EQ(back, v) << s;
    }
  }
  EXPECT_EQ(io::format_number(0.25), "0.25");
  EXPECT_EQ(io::format_number(-0.0), "0");
}

TEST(Csv, QuotingRoundTrip) {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
  io::CsvWriter w(fields);
  std::string line = w.str();
  line.pop_back();
  EXPECT_EQ(io::split_csv(line), fields);
}

TEST(Files, AtomicWriteReplaces) {
  TempDir tmp;
  const auto p = tmp.path() / "sub" / "out.txt";
  io::write_file_atomic(p, "first");
  io::write_file_atomic(p, "second");
  EXPECT_EQ(io::read_file(p), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(p.parent_path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
