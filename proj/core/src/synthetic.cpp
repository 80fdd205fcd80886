#include "alnids/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <set>

#include "alnids/error.hpp"
#include "alnids/random.hpp"

namespace alnids {

const std::vector<std::pair<std::string, std::size_t>>& kdd10_label_counts() {
  static const std::vector<std::pair<std::string, std::size_t>> counts = {
      {"smurf.", 280790},      {"neptune.", 107201},       {"normal.", 97278},   {"back.", 2203},
      {"satan.", 1589},        {"ipsweep.", 1247},         {"portsweep.", 1040}, {"warezclient.", 1020},
      {"teardrop.", 979},      {"pod.", 264},              {"nmap.", 231},       {"guess_passwd.", 53},
      {"buffer_overflow.", 30}, {"land.", 21},             {"warezmaster.", 20}, {"imap.", 12},
      {"rootkit.", 10},        {"loadmodule.", 9},         {"ftp_write.", 8},    {"multihop.", 7},
      {"phf.", 4},             {"perl.", 3},               {"spy.", 2},
  };
  return counts;
}

namespace {

// Column indices in file order.
enum Col : std::size_t {
  kDuration, kProtocol, kService, kFlag, kSrcBytes, kDstBytes, kLand, kWrongFragment, kUrgent, kHot,
  kNumFailedLogins, kLoggedIn, kNumCompromised, kRootShell, kSuAttempted, kNumRoot, kNumFileCreations,
  kNumShells, kNumAccessFiles, kNumOutboundCmds, kIsHostLogin, kIsGuestLogin, kCount, kSrvCount,
  kSerrorRate, kSrvSerrorRate, kRerrorRate, kSrvRerrorRate, kSameSrvRate, kDiffSrvRate,
  kSrvDiffHostRate, kDstHostCount, kDstHostSrvCount, kDstHostSameSrvRate, kDstHostDiffSrvRate,
  kDstHostSameSrcPortRate, kDstHostSrvDiffHostRate, kDstHostSerrorRate, kDstHostSrvSerrorRate,
  kDstHostRerrorRate, kDstHostSrvRerrorRate,
};

const std::vector<std::string> kTcpServices = {
    "telnet", "finger", "auth", "pop_3", "time", "imap4", "IRC", "X11", "ssh", "sunrpc", "mtp",
    "link", "remote_job", "gopher", "name", "whois", "login", "csnet_ns", "daytime", "discard",
    "echo", "systat", "netstat", "hostnames", "iso_tsap", "klogin", "kshell", "ldap", "netbios_ns",
    "netbios_dgm", "netbios_ssn", "nntp", "nnsp", "pop_2", "printer", "rje", "shell", "sql_net",
    "supdup", "uucp", "uucp_path", "vmnet", "courier", "ctf", "efs", "exec", "bgp", "Z39_50",
    "http_443", "domain", "other", "private", "smtp", "ftp", "ftp_data", "http"};

class Draw {
 public:
  explicit Draw(Rng& rng) : rng_(rng) {}

  double unit() { return uniform_unit(rng_); }
  bool chance(double p) { return unit() < p; }
  long integer(long lo, long hi) {
    return lo + static_cast<long>(uniform_below(rng_, static_cast<std::uint64_t>(hi - lo + 1)));
  }
  // Rates in the KDD file carry two decimals.
  double rate(double lo, double hi) { return std::round((lo + unit() * (hi - lo)) * 100.0) / 100.0; }
  double normal() {
    const double u1 = std::max(unit(), 1e-300);
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  double lognormal(double median, double sigma, double lo, double hi) {
    return std::clamp(std::round(median * std::exp(sigma * normal())), lo, hi);
  }
  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[uniform_below(rng_, items.size())];
  }
  std::string pick(std::initializer_list<const char*> items) {
    return *(items.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng_, items.size())));
  }
  // Weighted choice; weights need not sum to one.
  std::string weighted(std::initializer_list<std::pair<const char*, double>> items) {
    double total = 0.0;
    for (const auto& it : items) total += it.second;
    double u = unit() * total;
    for (const auto& it : items) {
      if (u < it.second) return it.first;
      u -= it.second;
    }
    return (items.end() - 1)->first;
  }

 private:
  Rng& rng_;
};

struct Builder {
  RawRecord r;

  explicit Builder(std::string label) {
    r.numeric.fill(0.0);
    r.label = std::move(label);
  }
  Builder& cat(std::string protocol, std::string service, std::string flag) {
    r.categorical = {std::move(protocol), std::move(service), std::move(flag)};
    return *this;
  }
  Builder& set(Col c, double v) {
    r.numeric[c] = v;
    return *this;
  }
};

// Host-window error rates consistent with the connection flag.
void error_rates(Builder& b, Draw& d, const std::string& flag, double strength) {
  if (flag == "S0" || flag == "SH" || flag == "RSTOS0") {
    b.set(kSerrorRate, d.rate(strength, 1.0)).set(kSrvSerrorRate, d.rate(strength, 1.0));
    b.set(kDstHostSerrorRate, d.rate(strength, 1.0)).set(kDstHostSrvSerrorRate, d.rate(strength, 1.0));
  } else if (flag == "REJ" || flag == "RSTR" || flag == "RSTO") {
    b.set(kRerrorRate, d.rate(strength, 1.0)).set(kSrvRerrorRate, d.rate(strength, 1.0));
    b.set(kDstHostRerrorRate, d.rate(strength, 1.0)).set(kDstHostSrvRerrorRate, d.rate(strength, 1.0));
  }
}

RawRecord normal_record(Draw& d) {
  Builder b("normal.");
  const double u = d.unit();
  if (u < 0.62) {
    const std::string flag = d.weighted({{"SF", 0.975}, {"S1", 0.006}, {"RSTO", 0.006}, {"REJ", 0.008}, {"S3", 0.005}});
    b.cat("tcp", "http", flag);
    b.set(kDuration, d.chance(0.95) ? 0 : d.integer(1, 10));
    b.set(kSrcBytes, d.lognormal(250, 0.35, 100, 3000));
    b.set(kDstBytes, d.lognormal(2500, 1.1, 0, 150000));
    b.set(kLoggedIn, flag == "SF" ? 1 : 0);
    b.set(kHot, d.chance(0.03) ? d.integer(1, 4) : 0);
    const long count = d.chance(0.7) ? d.integer(1, 12) : d.integer(13, 60);
    b.set(kCount, count).set(kSrvCount, count + d.integer(0, 25));
    b.set(kSameSrvRate, d.chance(0.92) ? 1.0 : d.rate(0.5, 1.0));
    b.set(kDiffSrvRate, d.chance(0.9) ? 0.0 : d.rate(0.0, 0.2));
    b.set(kSrvDiffHostRate, d.chance(0.7) ? 0.0 : d.rate(0.0, 0.4));
    b.set(kDstHostCount, d.integer(1, 255));
    b.set(kDstHostSrvCount, d.chance(0.55) ? 255 : d.integer(1, 255));
    b.set(kDstHostSameSrvRate, d.chance(0.6) ? 1.0 : d.rate(0.3, 1.0));
    b.set(kDstHostDiffSrvRate, d.chance(0.8) ? 0.0 : d.rate(0.0, 0.05));
    b.set(kDstHostSameSrcPortRate, d.chance(0.7) ? 0.0 : d.rate(0.0, 0.1));
    b.set(kDstHostSrvDiffHostRate, d.chance(0.7) ? 0.0 : d.rate(0.0, 0.1));
    error_rates(b, d, flag, 0.5);
  } else if (u < 0.72) {
    b.cat("tcp", "smtp", d.chance(0.98) ? "SF" : "S1");
    b.set(kDuration, d.chance(0.8) ? 0 : d.integer(1, 30));
    b.set(kSrcBytes, d.lognormal(1000, 0.8, 200, 40000));
    b.set(kDstBytes, d.lognormal(330, 0.2, 150, 2000));
    b.set(kLoggedIn, 1);
    b.set(kCount, d.integer(1, 5)).set(kSrvCount, d.integer(1, 8));
    b.set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 255));
    b.set(kDstHostSameSrvRate, d.rate(0.1, 1.0)).set(kDstHostDiffSrvRate, d.rate(0.0, 0.1));
    b.set(kDstHostSameSrcPortRate, d.rate(0.0, 0.05));
  } else if (u < 0.76) {
    b.cat("tcp", "ftp_data", "SF");
    b.set(kDuration, d.chance(0.8) ? 0 : d.lognormal(5, 1.5, 1, 3000));
    b.set(kSrcBytes, d.lognormal(1500, 1.8, 1, 5000000));
    b.set(kDstBytes, d.chance(0.8) ? 0 : d.lognormal(2000, 1.5, 1, 1000000));
    b.set(kLoggedIn, 1);
    b.set(kCount, d.integer(1, 10)).set(kSrvCount, d.integer(1, 20));
    b.set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 100));
    b.set(kDstHostSameSrvRate, d.rate(0.0, 1.0));
    b.set(kDstHostSameSrcPortRate, d.rate(0.0, 1.0));
  } else if (u < 0.77) {
    b.cat("tcp", "ftp", "SF");
    b.set(kDuration, d.integer(0, 300));
    b.set(kSrcBytes, d.lognormal(300, 0.7, 20, 5000));
    b.set(kDstBytes, d.lognormal(800, 0.7, 50, 20000));
    b.set(kLoggedIn, 1);
    b.set(kHot, d.chance(0.2) ? d.integer(1, 5) : 0);
    b.set(kNumFailedLogins, d.chance(0.01) ? 1 : 0);
    b.set(kIsGuestLogin, d.chance(0.03) ? 1 : 0);
    b.set(kCount, d.integer(1, 4)).set(kSrvCount, d.integer(1, 4));
    b.set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 60));
    b.set(kDstHostSameSrvRate, d.rate(0.0, 1.0));
  } else if (u < 0.83) {
    b.cat("udp", "domain_u", "SF");
    b.set(kSrcBytes, d.integer(28, 60)).set(kDstBytes, d.integer(60, 250));
    const long count = d.integer(1, 200);
    b.set(kCount, count).set(kSrvCount, count);
    b.set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, 255).set(kDstHostSrvCount, d.integer(200, 255));
    b.set(kDstHostSameSrvRate, d.rate(0.8, 1.0)).set(kDstHostDiffSrvRate, d.rate(0.0, 0.02));
  } else if (u < 0.88) {
    b.cat("udp", "private", "SF");
    b.set(kSrcBytes, d.integer(20, 120)).set(kDstBytes, d.integer(20, 150));
    const long count = d.integer(1, 300);
    b.set(kCount, count).set(kSrvCount, std::max<long>(1, count - d.integer(0, 5)));
    b.set(kSameSrvRate, d.rate(0.9, 1.0)).set(kDiffSrvRate, d.rate(0.0, 0.05));
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 255));
    b.set(kDstHostSameSrvRate, d.rate(0.5, 1.0));
    b.set(kDstHostSameSrcPortRate, d.rate(0.0, 0.3));
  } else if (u < 0.885) {
    b.cat("udp", "ntp_u", "SF");
    b.set(kSrcBytes, 48).set(kDstBytes, 48);
    b.set(kCount, d.integer(1, 3)).set(kSrvCount, d.integer(1, 3)).set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 100));
    b.set(kDstHostSameSrvRate, d.rate(0.2, 1.0));
  } else if (u < 0.895) {
    const std::string svc = d.weighted({{"ecr_i", 0.5}, {"eco_i", 0.3}, {"urp_i", 0.15}, {"tim_i", 0.05}});
    b.cat("icmp", svc, "SF");
    b.set(kSrcBytes, d.lognormal(64, 1.0, 8, 1480));
    b.set(kCount, d.integer(1, 5)).set(kSrvCount, d.integer(1, 20));
    b.set(kSameSrvRate, 1.0);
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 120));
    b.set(kDstHostSameSrvRate, d.rate(0.0, 1.0)).set(kDstHostSameSrcPortRate, d.rate(0.0, 1.0));
    b.set(kDstHostSrvDiffHostRate, d.rate(0.0, 0.3));
  } else {
    const std::string flag = d.weighted({{"SF", 0.93}, {"REJ", 0.03}, {"RSTO", 0.015}, {"S0", 0.01}, {"RSTR", 0.01}, {"SH", 0.005}});
    b.cat("tcp", d.pick(kTcpServices), flag);
    b.set(kDuration, d.chance(0.6) ? 0 : d.lognormal(20, 2.0, 1, 30000));
    if (flag == "SF") {
      b.set(kSrcBytes, d.lognormal(200, 1.5, 1, 200000));
      b.set(kDstBytes, d.chance(0.2) ? 0 : d.lognormal(1500, 1.5, 1, 2000000));
      b.set(kLoggedIn, d.chance(0.8) ? 1 : 0);
    }
    b.set(kHot, d.chance(0.05) ? d.integer(1, 6) : 0);
    b.set(kNumFailedLogins, d.chance(0.005) ? 1 : 0);
    b.set(kRootShell, d.chance(0.002) ? 1 : 0);
    b.set(kNumFileCreations, d.chance(0.01) ? d.integer(1, 3) : 0);
    b.set(kNumAccessFiles, d.chance(0.005) ? 1 : 0);
    b.set(kCount, d.integer(1, 20)).set(kSrvCount, d.integer(1, 20));
    b.set(kSameSrvRate, d.chance(0.8) ? 1.0 : d.rate(0.2, 1.0));
    b.set(kDiffSrvRate, d.chance(0.8) ? 0.0 : d.rate(0.0, 0.3));
    b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 255));
    b.set(kDstHostSameSrvRate, d.rate(0.0, 1.0)).set(kDstHostDiffSrvRate, d.rate(0.0, 0.2));
    b.set(kDstHostSameSrcPortRate, d.rate(0.0, 0.3)).set(kDstHostSrvDiffHostRate, d.rate(0.0, 0.2));
    error_rates(b, d, flag, 0.3);
  }
  return std::move(b.r);
}

RawRecord smurf_record(Draw& d) {
  Builder b("smurf.");
  b.cat("icmp", d.chance(0.995) ? "ecr_i" : "eco_i", "SF");
  const double u = d.unit();
  b.set(kSrcBytes, u < 0.9 ? 1032 : (u < 0.99 ? 520 : d.integer(300, 1480)));
  const long count = d.chance(0.85) ? 511 : d.integer(100, 510);
  b.set(kCount, count).set(kSrvCount, count);
  b.set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.chance(0.9) ? 255 : d.integer(50, 254));
  b.set(kDstHostSrvCount, d.chance(0.9) ? 255 : d.integer(50, 254));
  b.set(kDstHostSameSrvRate, 1.0);
  b.set(kDstHostSameSrcPortRate, d.chance(0.9) ? 1.0 : d.rate(0.5, 1.0));
  return std::move(b.r);
}

RawRecord neptune_record(Draw& d) {
  Builder b("neptune.");
  const std::string flag = d.weighted({{"S0", 0.8}, {"REJ", 0.17}, {"RSTO", 0.02}, {"SH", 0.01}});
  b.cat("tcp", d.chance(0.55) ? "private" : d.pick(kTcpServices), flag);
  const long count = d.integer(100, 511);
  b.set(kCount, count).set(kSrvCount, d.integer(1, 30));
  error_rates(b, d, flag, 0.9);
  b.set(kSameSrvRate, d.rate(0.0, 0.1)).set(kDiffSrvRate, d.rate(0.05, 0.1));
  b.set(kDstHostCount, 255).set(kDstHostSrvCount, d.integer(1, 30));
  b.set(kDstHostSameSrvRate, d.rate(0.0, 0.12)).set(kDstHostDiffSrvRate, d.rate(0.04, 0.1));
  return std::move(b.r);
}

RawRecord back_record(Draw& d) {
  Builder b("back.");
  b.cat("tcp", "http", d.chance(0.97) ? "SF" : "RSTR");
  b.set(kDuration, d.chance(0.9) ? 0 : d.integer(1, 5));
  b.set(kSrcBytes, d.chance(0.9) ? 54540 : d.integer(40000, 54540));
  b.set(kDstBytes, d.chance(0.85) ? 8314 : d.integer(7000, 8400));
  b.set(kHot, 2).set(kLoggedIn, 1).set(kNumCompromised, d.chance(0.4) ? 1 : 0);
  b.set(kCount, d.integer(1, 8)).set(kSrvCount, d.integer(1, 8));
  b.set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.integer(20, 255)).set(kDstHostSrvCount, d.integer(100, 255));
  b.set(kDstHostSameSrvRate, 1.0).set(kDstHostSameSrcPortRate, d.rate(0.0, 0.05));
  return std::move(b.r);
}

RawRecord satan_record(Draw& d) {
  Builder b("satan.");
  const double p = d.unit();
  const std::string flag = d.weighted({{"REJ", 0.45}, {"S0", 0.15}, {"SF", 0.2}, {"RSTO", 0.1}, {"RSTR", 0.1}});
  if (p < 0.85) {
    b.cat("tcp", d.pick(kTcpServices), flag);
  } else if (p < 0.95) {
    b.cat("udp", "private", "SF");
  } else {
    b.cat("icmp", "eco_i", "SF");
  }
  if (flag == "SF") b.set(kSrcBytes, d.integer(0, 20)).set(kDstBytes, d.integer(0, 200));
  const long count = d.chance(0.5) ? d.integer(1, 10) : d.integer(100, 500);
  b.set(kCount, count).set(kSrvCount, d.integer(1, 10));
  error_rates(b, d, flag, 0.5);
  b.set(kSameSrvRate, d.rate(0.0, 0.3)).set(kDiffSrvRate, d.rate(0.5, 1.0));
  b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 20));
  b.set(kDstHostSameSrvRate, d.rate(0.0, 0.2)).set(kDstHostDiffSrvRate, d.rate(0.5, 1.0));
  b.set(kDstHostSameSrcPortRate, d.rate(0.0, 1.0));
  return std::move(b.r);
}

RawRecord ipsweep_record(Draw& d) {
  Builder b("ipsweep.");
  const bool icmp = d.chance(0.93);
  b.cat(icmp ? "icmp" : "tcp", icmp ? (d.chance(0.9) ? "eco_i" : "ecr_i") : "private", icmp ? "SF" : "REJ");
  if (icmp) b.set(kSrcBytes, d.chance(0.7) ? 8 : 18);
  b.set(kCount, d.integer(1, 2)).set(kSrvCount, d.integer(1, 40));
  b.set(kSameSrvRate, 1.0).set(kSrvDiffHostRate, d.rate(0.8, 1.0));
  b.set(kDstHostCount, d.integer(1, 100)).set(kDstHostSrvCount, d.integer(1, 60));
  b.set(kDstHostSameSrvRate, d.rate(0.5, 1.0)).set(kDstHostSameSrcPortRate, d.rate(0.6, 1.0));
  b.set(kDstHostSrvDiffHostRate, d.rate(0.3, 1.0));
  if (!icmp) error_rates(b, d, "REJ", 0.7);
  return std::move(b.r);
}

RawRecord portsweep_record(Draw& d) {
  Builder b("portsweep.");
  const std::string flag = d.weighted({{"REJ", 0.45}, {"RSTR", 0.35}, {"RSTOS0", 0.1}, {"SF", 0.1}});
  b.cat("tcp", d.chance(0.8) ? "private" : d.pick(kTcpServices), flag);
  b.set(kDuration, d.chance(0.9) ? 0 : d.integer(1, 40000));
  b.set(kCount, d.integer(1, 2)).set(kSrvCount, d.integer(1, 2));
  error_rates(b, d, flag, 0.5);
  b.set(kSameSrvRate, d.rate(0.5, 1.0)).set(kSrvDiffHostRate, d.chance(0.5) ? 1.0 : 0.0);
  b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 10));
  b.set(kDstHostSameSrvRate, d.rate(0.0, 0.1)).set(kDstHostDiffSrvRate, d.rate(0.2, 1.0));
  b.set(kDstHostSameSrcPortRate, d.rate(0.8, 1.0)).set(kDstHostSrvRerrorRate, d.rate(0.8, 1.0));
  return std::move(b.r);
}

RawRecord warezclient_record(Draw& d) {
  Builder b("warezclient.");
  const bool data = d.chance(0.65);
  b.cat("tcp", data ? "ftp_data" : "ftp", "SF");
  b.set(kDuration, d.lognormal(300, 1.5, 1, 15000));
  b.set(kSrcBytes, d.lognormal(data ? 30000 : 2000, 1.2, 100, 5000000));
  b.set(kDstBytes, data ? 0 : d.lognormal(2000, 0.8, 100, 100000));
  b.set(kLoggedIn, 1);
  b.set(kHot, data ? 0 : d.integer(1, 28));
  b.set(kIsGuestLogin, data ? 0 : (d.chance(0.95) ? 1 : 0));
  b.set(kCount, d.integer(1, 3)).set(kSrvCount, d.integer(1, 3));
  b.set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.integer(1, 30)).set(kDstHostSrvCount, d.integer(1, 30));
  b.set(kDstHostSameSrvRate, d.rate(0.5, 1.0)).set(kDstHostSameSrcPortRate, d.rate(0.0, 1.0));
  b.set(kDstHostSrvDiffHostRate, d.rate(0.1, 0.5));
  return std::move(b.r);
}

RawRecord teardrop_record(Draw& d) {
  Builder b("teardrop.");
  b.cat("udp", "private", "SF");
  b.set(kSrcBytes, 28).set(kWrongFragment, 3);
  const long count = d.integer(1, 100);
  b.set(kCount, count).set(kSrvCount, count);
  b.set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 255));
  b.set(kDstHostSameSrvRate, d.rate(0.5, 1.0)).set(kDstHostSameSrcPortRate, d.rate(0.0, 0.5));
  return std::move(b.r);
}

RawRecord pod_record(Draw& d) {
  Builder b("pod.");
  b.cat("icmp", d.chance(0.95) ? "ecr_i" : "tim_i", "SF");
  b.set(kSrcBytes, 1480).set(kWrongFragment, 1);
  b.set(kCount, d.integer(1, 10)).set(kSrvCount, d.integer(1, 10));
  b.set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 255));
  b.set(kDstHostSameSrvRate, d.rate(0.5, 1.0)).set(kDstHostSameSrcPortRate, d.rate(0.0, 1.0));
  return std::move(b.r);
}

RawRecord nmap_record(Draw& d) {
  Builder b("nmap.");
  const double p = d.unit();
  if (p < 0.45) {
    const std::string flag = d.weighted({{"SF", 0.3}, {"S0", 0.2}, {"REJ", 0.25}, {"RSTR", 0.15}, {"SH", 0.1}});
    b.cat("tcp", d.chance(0.6) ? "private" : d.pick(kTcpServices), flag);
    if (flag == "SF") b.set(kSrcBytes, d.integer(0, 10));
    error_rates(b, d, flag, 0.5);
  } else if (p < 0.8) {
    b.cat("icmp", d.weighted({{"eco_i", 0.8}, {"ecr_i", 0.1}, {"urp_i", 0.1}}), "SF");
    b.set(kSrcBytes, d.chance(0.5) ? 8 : 18);
  } else {
    b.cat("udp", "private", "SF");
    b.set(kSrcBytes, d.integer(1, 40)).set(kDstBytes, d.chance(0.5) ? 0 : d.integer(1, 40));
  }
  b.set(kCount, d.integer(1, 3)).set(kSrvCount, d.integer(1, 3));
  b.set(kSameSrvRate, d.rate(0.5, 1.0)).set(kSrvDiffHostRate, d.rate(0.0, 0.5));
  b.set(kDstHostCount, d.integer(1, 50)).set(kDstHostSrvCount, d.integer(1, 40));
  b.set(kDstHostSameSrvRate, d.rate(0.0, 0.6)).set(kDstHostDiffSrvRate, d.rate(0.3, 1.0));
  b.set(kDstHostSameSrcPortRate, d.rate(0.5, 1.0)).set(kDstHostSrvDiffHostRate, d.rate(0.0, 0.5));
  return std::move(b.r);
}

// The rare attacks: content-level intrusions over tcp sessions.
RawRecord rare_record(Draw& d, const std::string& label) {
  Builder b(label);
  if (label == "land.") {
    b.cat("tcp", d.pick(kTcpServices), "S0");
    b.set(kLand, 1).set(kCount, 1).set(kSrvCount, 1);
    error_rates(b, d, "S0", 0.9);
    return std::move(b.r);
  }
  std::string service = "telnet";
  if (label == "imap.") service = "imap4";
  else if (label == "phf.") service = "http";
  else if (label == "ftp_write." || label == "warezmaster.") service = "ftp";
  b.cat("tcp", service, "SF");
  b.set(kDuration, d.lognormal(60, 1.5, 0, 30000));
  b.set(kSrcBytes, d.lognormal(1500, 1.5, 10, 2000000));
  b.set(kDstBytes, d.lognormal(3000, 1.5, 0, 2000000));
  b.set(kLoggedIn, label == "guess_passwd." ? 0 : 1);
  b.set(kNumFailedLogins, label == "guess_passwd." ? 1 : 0);
  b.set(kHot, d.integer(0, 6)).set(kRootShell, d.chance(0.5) ? 1 : 0);
  b.set(kNumFileCreations, d.integer(0, 3)).set(kNumCompromised, d.integer(0, 3));
  b.set(kCount, d.integer(1, 3)).set(kSrvCount, d.integer(1, 3)).set(kSameSrvRate, 1.0);
  b.set(kDstHostCount, d.integer(1, 255)).set(kDstHostSrvCount, d.integer(1, 50));
  b.set(kDstHostSameSrvRate, d.rate(0.0, 1.0));
  return std::move(b.r);
}

RawRecord make_record(Draw& d, const std::string& label) {
  if (label == "normal.") return normal_record(d);
  if (label == "smurf.") return smurf_record(d);
  if (label == "neptune.") return neptune_record(d);
  if (label == "back.") return back_record(d);
  if (label == "satan.") return satan_record(d);
  if (label == "ipsweep.") return ipsweep_record(d);
  if (label == "portsweep.") return portsweep_record(d);
  if (label == "warezclient.") return warezclient_record(d);
  if (label == "teardrop.") return teardrop_record(d);
  if (label == "pod.") return pod_record(d);
  if (label == "nmap.") return nmap_record(d);
  return rare_record(d, label);
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, end);
}

}  // namespace

std::vector<RawRecord> generate_kdd_like(const SyntheticOptions& options) {
  if (!(options.scale > 0.0)) throw InvalidArgument("scale must be positive");
  const std::set<std::string> wanted(options.labels.begin(), options.labels.end());
  std::vector<RawRecord> records;
  std::uint64_t stream = 0;
  for (const auto& [label, count] : kdd10_label_counts()) {
    ++stream;
    if (!wanted.empty() && !wanted.count(label)) continue;
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(count) * options.scale)));
    // One stream per label keeps each label's records independent of the others.
    Rng rng(derive_seed(options.seed, stream));
    Draw draw(rng);
    for (std::size_t i = 0; i < n; ++i) records.push_back(make_record(draw, label));
  }
  Rng order(derive_seed(options.seed, 0));
  shuffle(std::span<RawRecord>(records), order);
  return records;
}

void write_kdd(std::ostream& out, const std::vector<RawRecord>& records) {
  std::string buf;
  for (const auto& r : records) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const int slot = categorical_slot(f);
      if (slot >= 0) {
        buf += r.categorical[static_cast<std::size_t>(slot)];
      } else if (!std::isnan(r.numeric[f])) {
        append_number(buf, r.numeric[f]);
      }
      buf += ',';
    }
    buf += r.label;
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace alnids
