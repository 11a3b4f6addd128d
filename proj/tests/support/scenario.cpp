#include "scenario.hpp"

#include "zip_writer.hpp"

namespace iab_test::scenario {

namespace {

const char* kHost = "http://127.0.0.1:18082";

std::string url(const char* path) { return std::string(kHost) + path; }

// wrapped in enough boilerplate that extraction has something to strip
std::string article_html(const std::string& title, const std::string& heading,
                         const std::vector<std::string>& paragraphs) {
    std::string out;
    out += "<html><head><title>" + title + "</title>\n";
    out += "<style>body{font:15px/1.5 Georgia,serif;margin:0}</style>\n";
    out += "<script>window.__tracker={page:'" + heading + "'};</script>\n";
    out += "</head>\n<body>\n";
    out += "<nav><a href=\"/\">Front page</a> <a href=\"/tides\">Tide charts</a> "
           "<a href=\"/letters\">Letters</a></nav>\n";
    out += "<header>Calder Bay coverage, updated daily</header>\n";
    out += "<article>\n<h1>" + heading + "</h1>\n";
    for (const auto& p : paragraphs) out += "<p>" + p + "</p>\n";
    out += "</article>\n";
    out += "<aside>More from the harbor desk: mooring fees, ferry times, gull counts.</aside>\n";
    out += "<footer>Subscriptions and corrections: desk@example.invalid</footer>\n";
    out += "</body></html>\n";
    return out;
}

std::map<std::string, PageFixture> build_pages() {
    std::map<std::string, PageFixture> out;

    out[url("/gazette/meridian-array-expansion")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Meridian Array expansion halted at Calder Bay",
            "Meridian Array Expansion Halted At Calder Bay",
            {"Harbor Dynamics operates Meridian Array. Meridian Array sits in Calder Bay. "
             "The project has anchored the harbor economy since its first season.",
             "Harbor Dynamics built Turbine Hall. Turbine Hall powers Meridian Array. "
             "Harbor Dynamics surveys Calder Bay. The survey boats work the channel at "
             "first light.",
             "Coastal Energy Board issued Permit 47. The permit pauses any new turbine "
             "foundations for the rest of the season.",
             "Mara Voss leads Kestrel Fishers Union. Kestrel Fishers Union gathers at "
             "Calder Wharf. Kestrel Fishers Union protested Meridian Array. The union says "
             "its herring grounds shifted after the first turbines went in.",
             "Harbor Gazette profiled Harbor Dynamics. Pia Mercer edits Harbor Gazette. "
             "Pia Mercer founded Harbor Gazette. The paper has covered the bay for three "
             "decades."})};

    out[url("/gazette/calder-wharf-protest")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Fishers rally at Calder Wharf over tidal project",
            "Fishers Rally At Calder Wharf",
            {"Mara Voss leads Kestrel Fishers Union. Kestrel Fishers Union gathers at "
             "Calder Wharf. Mara Voss rallies crews near Calder Wharf. The crowd filled "
             "the quay by early afternoon.",
             "Kestrel Fishers Union protested Meridian Array. Meridian Array sits in "
             "Calder Bay. The union wants catch data reviewed before any expansion.",
             "Calder Institute published Reef Survey. Nilo Brandt authored Reef Survey. "
             "Nilo Brandt directs Calder Institute. Reef Survey examined Calder Bay. The "
             "findings track eelgrass beds across four seasons.",
             "Harbor Gazette interviewed Mara Voss. Pia Mercer edits Harbor Gazette. "
             "Pia Mercer founded Harbor Gazette. The interview ran under a banner "
             "headline."})};

    out[url("/tribune/permit-47-ruling")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Permit 47 ruling pauses Calder Bay tidal build-out",
            "Permit Ruling Pauses Tidal Build",
            {"Coastal Energy Board issued Permit 47. Marine Authority reviews Permit 47. "
             "Coastal Energy Board consults Marine Authority. The ruling came after a "
             "week of closed sessions.",
             "Coastal Energy Board halted Meridian Array. Harbor Dynamics operates "
             "Meridian Array. The halt covers new foundations but not the running "
             "turbines.",
             "Calder Institute published Reef Survey. Mara Voss leads Kestrel Fishers "
             "Union. The ruling cites the survey's eelgrass chapters and the union's "
             "catch logs.",
             "Northlight Capital manages Tidewater Fund. Elba Sorens oversees Tidewater "
             "Fund. Tidewater Fund finances Harbor Dynamics. The financing terms were "
             "not disclosed.",
             "Pia Mercer questioned Coastal Energy Board. The board declined a longer "
             "interview."})};

    out[url("/tribune/tidewater-fund-stake")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Tidewater Fund deepens stake in tidal developer",
            "Tidewater Fund Deepens Tidal Stake",
            {"Northlight Capital manages Tidewater Fund. Elba Sorens chairs Northlight "
             "Capital. Elba Sorens oversees Tidewater Fund. The fund reported a strong "
             "quarter on the back of coastal holdings.",
             "Tidewater Fund finances Harbor Dynamics. Harbor Dynamics built Turbine "
             "Hall. Northlight Capital lobbied Coastal Energy Board. The lobbying "
             "registry lists two meetings this spring.",
             "The business desk first reported the fund's position this spring.",
             "The fund's managers describe the position as a long bet on predictable "
             "power. Analysts who follow coastal infrastructure call the pricing rich "
             "but defensible. The quarter's letter spends three pages on tidal "
             "generation and one on storage.",
             "Retail interest in the sector has grown for two straight years. The letter "
             "cautions that permitting timelines remain the main source of risk. Several "
             "rival funds trimmed their coastal positions over the same period.",
             "The fund's fee structure drew questions at the annual meeting. Its "
             "managers pointed to a decade of audited returns. The meeting closed "
             "without a vote on the new mandate.",
             "Industry newsletters picked up the filing within hours. The coverage "
             "focused on the size of the stake rather than its terms. A longer analysis "
             "is promised for the weekend edition.",
             "The harbor's other employers watched the filing with interest. Seasonal "
             "hiring usually follows the investment cycle here. Local landlords have "
             "already raised winter rates.",
             "The fund declined to comment beyond the letter. Its next disclosure lands "
             "at the end of the quarter. Until then the harbor will read the tides as "
             "it always has."})};

    out[url("/ledger/board-review-hearing")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Energy board hearing weighs Calder Bay evidence",
            "Hearing Weighs Calder Bay Evidence",
            {"Coastal Energy Board issued Permit 47. Marine Authority reviews Permit 47. "
             "Coastal Energy Board consults Marine Authority. The hearing room was full "
             "an hour before the session.",
             "Coastal Energy Board halted Meridian Array. Meridian Array sits in Calder "
             "Bay. The board held its vote until the written record closes.",
             "Coastal Energy Board cited Reef Survey. Calder Institute published Reef "
             "Survey. Nilo Brandt authored Reef Survey. Reef Survey examined Calder Bay. "
             "The chapters on eelgrass drew the longest questions.",
             "Mara Voss leads Kestrel Fishers Union. Kestrel Fishers Union gathers at "
             "Calder Wharf. Mara Voss rallies crews near Calder Wharf. The union filed "
             "its catch logs as evidence.",
             "Pia Mercer edits Harbor Gazette. Pia Mercer founded Harbor Gazette. Harbor "
             "Gazette hired Pia Mercer. The paper live-posted the session from the "
             "gallery."})};

    out[url("/ledger/reef-survey-findings")] = {
        200, "text/html; charset=utf-8",
        article_html(
            "Reef survey shapes tidal expansion review",
            "Reef Survey Shapes Expansion Review",
            {"Calder Institute published Reef Survey. Nilo Brandt authored Reef Survey. "
             "Nilo Brandt directs Calder Institute. The survey ran across four tide "
             "cycles.",
             "Reef Survey examined Calder Bay. Harbor Dynamics operates Meridian Array. "
             "Turbine Hall powers Meridian Array. The chapters map sediment drift around "
             "each foundation.",
             "Harbor Gazette covered Reef Survey. The coverage summarized the method in "
             "plain terms.",
             "Kestrel Fishers Union gathers at Calder Wharf. Crews there asked for the "
             "survey's station maps.",
             "Northlight Capital manages Tidewater Fund. Elba Sorens chairs Northlight "
             "Capital. The fund cited the survey in its quarterly letter.",
             "The survey team logged eelgrass density at forty stations. Divers repeated "
             "each transect on spring and neap tides. The appendix publishes the raw "
             "station tables.",
             "Reviewers praised the sampling design in early comments. A second season "
             "of fieldwork is already funded. The institute will host a public briefing "
             "next month.",
             "The bay's water clarity helped the photographic record. Gulls followed "
             "the survey boats most mornings. The crews grew used to the attention.",
             "A summary pamphlet is planned for the wharf noticeboard. The full dataset "
             "lands in an open archive this winter. The institute asks skippers to "
             "report tagged markers."})};

    out[url("/videos/launch-teaser")] = {
        200, "text/html; charset=utf-8",
        "<html><head><title>Watch: launch teaser</title></head><body>"
        "<nav><a href=\"/\">Front page</a></nav>"
        "<p>Watch the launch clip.</p>"
        "<footer>Player requires scripts.</footer></body></html>\n"};

    out[url("/files/impact-brochure.pdf")] = {
        200, "application/pdf",
        "%PDF-1.4\n1 0 obj << /Type /Catalog >> endobj\ntrailer << /Root 1 0 R >>\n%%EOF\n"};

    out[url("/archive/tide-tables-2019")] = {
        200, "text/html; charset=utf-8",
        "<html><head><title>Tide tables</title></head><body><p>Archived tables from "
        "2019.</p></body></html>\n"};

    out[url("/archive/harbor-notes-april")] = {
        200, "text/html; charset=utf-8",
        "<html><head><title>Harbor notes</title></head><body><p>Notes from April.</p>"
        "</body></html>\n"};

    return out;
}

// DATE NUMARTS COUNTS THEMES LOCATIONS PERSONS ORGANIZATIONS TONE CAMEOEVENTIDS SOURCES SOURCEURLS
std::string row(const std::string& date, const std::string& numarts, const std::string& themes,
                const std::string& locations, const std::string& persons,
                const std::string& organizations, const std::string& urls) {
    return date + "\t" + numarts + "\t\t" + themes + "\t" + locations + "\t" + persons + "\t" +
           organizations + "\t-2.1,3.4,5.5,0\t\tharborwire.example\t" + urls + "\n";
}

const char* kLocUs = "3#Calder Bay, Washington, United States#US#USWA#47.60#-122.33#1531602";
const char* kLocUk = "1#United Kingdom#UK#UK#54.00#-2.00#UK";

std::map<std::string, std::string> build_gkg_files() {
    std::map<std::string, std::string> files;

    std::string a1 = url("/gazette/meridian-array-expansion");
    std::string a2 = url("/gazette/calder-wharf-protest");
    std::string a3 = url("/tribune/permit-47-ruling");
    std::string b1 = url("/ledger/board-review-hearing");
    std::string b2 = url("/ledger/reef-survey-findings");

    {
        std::string f = "DATE\tNUMARTS\tCOUNTS\tTHEMES\tLOCATIONS\tPERSONS\tORGANIZATIONS\t"
                        "TONE\tCAMEOEVENTIDS\tSOURCES\tSOURCEURLS\n";
        f += row("20250602", "6", "ENV_OCEANS", kLocUs, "", "meridian array;harbor dynamics", a1);
        f += row("20250602", "3", "PROTEST", kLocUs, "", "harbor festival committee", a2);
        // day before the window opens; the miner must ignore it
        f += row("20250601", "50", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        files["20250602.gkg.csv"] = f;
    }
    {
        std::string f;
        f += row("20250603", "5", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        f += row("20250603", "7", "LEGISLATION", kLocUs, "", "coastal energy board", a3);
        f += "20250603\tbroken row with too few columns\n";
        f += row("2025060x", "4", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        f += row("20250603", "-4", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        files["20250603.gkg.csv"] = f;
    }
    {
        std::string f;
        f += row("20250604", "4", "ENV_OCEANS;PROTEST", kLocUs, "", "meridian array",
                 a2 + "<UDIV>" + a1);
        f += row("20250604", "3", "ENV_OCEANS", kLocUk, "", "meridian array", b2);
        files["20250604.gkg.csv"] = f;
    }
    {
        std::string day5;
        day5 += row("20250605", "5", "LEGISLATION;TRIAL", kLocUs, "", "coastal energy board", a3);
        day5 += row("20250605", "4", "LEGISLATION", kLocUs, "", "coastal energy board", b1);
        files["20250605.gkg.zip"] = iab_test::make_zip_single("20250605.gkg.csv", day5);
    }
    {
        std::string f;
        f += row("20250606", "9", "ENV_OCEANS", kLocUs, "", "meridian array", b2);
        files["20250606.gkg.csv"] = f;
    }
    {
        std::string f;
        f += row("20250607", "5", "LEGISLATION", kLocUs, "", "coastal energy board", b1);
        f += row("20250607", "2", "ARREST", kLocUs, "arlen dukes", "", a2);
        files["20250607.gkg.csv"] = f;
    }
    {
        std::string f;
        f += row("20250608", "7", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        // day after the window closes
        f += row("20250609", "40", "ENV_OCEANS", kLocUs, "", "meridian array", a1);
        files["20250608.gkg.csv"] = f;
    }
    return files;
}

std::map<std::string, std::vector<std::pair<std::string, std::string>>> build_search_hits() {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;

    out["meridian array ocean energy development"] = {
        {url("/gazette/meridian-array-expansion"),
         "Meridian Array expansion halted at Calder Bay"},
        {url("/gazette/calder-wharf-protest"), "Fishers rally at Calder Wharf over tidal project"},
        {url("/tribune/permit-47-ruling"), "Permit 47 ruling pauses Calder Bay tidal build-out"},
        {url("/tribune/permit-47-ruling") + "#ruling", "Permit 47 ruling (section link)"},
        {url("/tribune/tidewater-fund-stake"), "Tidewater Fund deepens stake in tidal developer"},
        {url("/videos/launch-teaser"), "Watch: Meridian Array launch teaser"},
        {url("/archive/tide-tables-2019"), "Calder Bay tide tables, 2019 archive"},
    };
    out["coastal energy board regulatory ruling"] = {
        {url("/ledger/board-review-hearing"), "Energy board hearing weighs Calder Bay evidence"},
        {url("/ledger/reef-survey-findings"), "Reef survey shapes tidal expansion review"},
        {url("/tribune/permit-47-ruling"), "Permit 47 ruling pauses Calder Bay tidal build-out"},
        {url("/tribune/tidewater-fund-stake"), "Tidewater Fund deepens stake in tidal developer"},
        {url("/files/impact-brochure.pdf"), "Calder Bay impact brochure (PDF)"},
        {"http://127.0.0.1:18099/wire/outage-feed", "Calder wire: live updates"},
        {url("/archive/harbor-notes-april"), "Harbor notes, April edition"},
    };

    auto context_hits = [&](const char* question, const char* u1, const char* u2) {
        out[question] = {{url(u1), "Calder Bay coverage"}, {url(u2), "Calder Bay coverage"}};
    };
    context_hits("Which body issued Permit 47?", "/tribune/permit-47-ruling",
                 "/ledger/board-review-hearing");
    context_hits("Who leads the Kestrel Fishers Union?", "/gazette/calder-wharf-protest",
                 "/ledger/board-review-hearing");
    context_hits("Which fund finances Harbor Dynamics?", "/tribune/tidewater-fund-stake",
                 "/tribune/permit-47-ruling");
    context_hits("Which institute published the Reef Survey?", "/ledger/reef-survey-findings",
                 "/ledger/board-review-hearing");
    context_hits("Who edits the Harbor Gazette?", "/gazette/meridian-array-expansion",
                 "/gazette/calder-wharf-protest");
    context_hits("Which company operates the Meridian Array?",
                 "/gazette/meridian-array-expansion", "/ledger/reef-survey-findings");
    return out;
}

std::vector<std::pair<std::string, std::string>> build_eval_items() {
    return {
        {"Which body issued Permit 47?", "Coastal Energy Board"},
        {"Who leads the Kestrel Fishers Union?", "Mara Voss"},
        {"Which fund finances Harbor Dynamics?", "Tidewater Fund"},
        {"Which institute published the Reef Survey?", "Calder Institute"},
        {"Who edits the Harbor Gazette?", "Pia Mercer"},
        {"Which company operates the Meridian Array?", "Harbor Dynamics"},
    };
}

} // namespace

const std::string& window() {
    static const std::string w = "2025-06-02..2025-06-08";
    return w;
}

const std::vector<std::string>& seed_texts() {
    static const std::vector<std::string> v = {
        "meridian array ocean energy development",
        "coastal energy board regulatory ruling",
    };
    return v;
}

std::map<std::string, std::string> gkg_files() { return build_gkg_files(); }

std::string page_host() { return kHost; }

const std::map<std::string, PageFixture>& pages() {
    static const auto p = build_pages();
    return p;
}

const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& search_hits() {
    static const auto h = build_search_hits();
    return h;
}

const std::vector<std::pair<std::string, std::string>>& eval_items() {
    static const auto items = build_eval_items();
    return items;
}

const std::string* gold_for(const std::string& question) {
    for (const auto& [q, gold] : eval_items())
        if (q == question) return &gold;
    return nullptr;
}

} // namespace iab_test::scenario
