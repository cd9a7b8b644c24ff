use super::SimError;

/// Original filler prose used when no corpus file is supplied.
const BUILTIN_TEXT: &str = "\
The harbor town woke slowly on the first cold morning of autumn. Fishing boats \
rocked against the pier while gulls argued over scraps left on the stones, and \
the baker at the corner opened his shutters to let the smell of warm bread drift \
into the narrow street. Most residents had lived there all their lives and knew \
every crack in the cobbles, every loose tile on the church roof, and every story \
about the storm that flooded the market square forty years earlier.

Mara had arrived only two weeks before, carrying a suitcase of books and a letter \
of introduction to the keeper of the lighthouse. The keeper was an old man with \
patient hands who repaired clocks in the evenings and spoke very little. He showed \
her how to trim the wick, how to polish the great lens until it shone like water, \
and how to record the passing ships in a ledger bound with faded green cloth. She \
learned to read the weather from the color of the horizon and the way the wind \
pressed against the tower windows.

In the afternoons she walked along the cliffs to the old quarry, where wild \
thyme grew between the rocks and the sea below turned from grey to a deep clear \
blue. From there she could see the whole coast bending away to the north, small \
villages scattered along it like beads on a thread. She often sat with a notebook \
and tried to describe the light, but the words never seemed to hold still long \
enough to be written down.

The library in the town hall was small but surprisingly well kept. A retired \
teacher volunteered there three days a week, sorting donations and mending torn \
spines with careful strips of tape. She recommended novels about sailors and \
explorers, atlases with hand colored maps, and a thick volume on the history of \
navigation that explained how early captains found their way by the stars. Mara \
borrowed it and read late into the night, copying diagrams of astrolabes and \
sextants into the margins of her own journal.

When the first winter storm came, the whole town gathered in the tavern near the \
harbor. Someone played an accordion, children fell asleep on the benches, and \
the fishermen traded predictions about how long the wind would last. Outside the \
waves climbed over the sea wall and the rain hammered the roofs, but inside the \
fire was bright and the talk was easy. Mara realized that she no longer felt like \
a visitor. She knew the names of the boats and the dogs, the price of coffee at \
the market, and which path to take home when the lower road was under water.

Spring brought visitors of its own. Painters set up easels on the breakwater, \
students came to study the tide pools, and a traveling theater company performed \
a comedy in the square every Saturday evening. The keeper grumbled about the \
noise but still walked down each week to watch, laughing quietly at the same \
jokes. In May a research vessel anchored offshore for several days, and its crew \
measured the temperature of the water at different depths, lowering instruments \
on long cables and writing numbers into waterproof notebooks.

By summer the lighthouse ledger had filled another volume. Mara began a project \
of her own, collecting the memories of the oldest residents before they were \
lost. She recorded stories about shipwrecks and weddings, about the year the \
herring vanished and the year they returned in such numbers that the nets tore. \
Each account was different, and some contradicted one another completely, yet \
together they formed a picture of the place that no single history book could \
offer. She planned to bind the collection and leave a copy in the little library, \
next to the atlas and the worn guide to the stars.

When the first storm of the next winter arrived, the town gathered in the hall \
beside the harbor. Children slept on folded coats while their parents traded \
news and checked the radio for reports from the boats still at sea. The keeper \
climbed the tower every hour to make sure the light was turning, and Mara kept \
the ledger open on the table, writing down each call that came in. Near dawn the \
last crew reached the pier, soaked and exhausted, and someone started to sing an \
old song about a sailor who found his way home by following a single lamp. By the \
time the sun rose over the grey water, the wind had dropped and the street was \
covered in seaweed, broken branches, and the bright scattered shells of crabs.

Years later, visitors who found the bound collection in the library often asked \
who had written it. The librarian would point to the tower on the headland and \
tell them to climb the stairs on a clear evening, when the lens caught the last \
light of the day and threw it far across the water toward the waiting ships.";

/// Keeps printable ASCII only and collapses whitespace runs to single spaces.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = true;
        } else if ch.is_ascii_graphic() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        }
    }
    out
}

/// Cleaned word list drawn from to lay out passages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    words: Vec<String>,
}

impl Corpus {
    pub fn from_text(raw: &str) -> Result<Self, SimError> {
        let words: Vec<String> = clean_text(raw).split(' ').filter(|w| !w.is_empty()).map(String::from).collect();
        if words.is_empty() {
            return Err(SimError::CorpusTooShort { needed: 1, available: 0 });
        }
        Ok(Self { words })
    }

    pub fn builtin() -> Self {
        Self::from_text(BUILTIN_TEXT).expect("builtin corpus is non-empty")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleaning_drops_non_ascii_and_collapses_spaces() {
        assert_eq!(clean_text("café  x"), "caf x");
        assert_eq!(clean_text("  a\t\n b  "), "a b");
        assert_eq!(clean_text("\u{2014}"), "");
    }

    #[test]
    fn builtin_is_large_enough_for_the_largest_passage() {
        let chars: usize = Corpus::builtin().words().iter().map(|w| w.len() + 1).sum();
        assert!(chars > 2 * 14 * 130, "{chars}");
    }
}
