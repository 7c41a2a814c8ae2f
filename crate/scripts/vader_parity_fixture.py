"""Regenerate crates/core/tests/fixtures/vader_parity.tsv.

Runs the upstream vaderSentiment package (pip install vaderSentiment==3.3.2)
over the sentences below and records unrounded scores.

    python3 scripts/vader_parity_fixture.py > crates/core/tests/fixtures/vader_parity.tsv
"""
import vaderSentiment.vaderSentiment as vs

# Upstream rounds to 3-4 decimals; record full precision instead.
vs.round = lambda x, n=None: x

SENTENCES = [
    # neutral / empty-ish
    "The committee met on Tuesday.",
    "Officials released the quarterly census tables for Ohio.",
    "A weather report for the Midwest.",
    # plain lexicon hits
    "The book was good.",
    "The harvest was bad this year.",
    "Residents described the new park as wonderful and safe.",
    "The flood was a disaster for the town.",
    "VADER is smart, handsome, and funny.",
    # punctuation emphasis
    "VADER is smart, handsome, and funny!",
    "The response was GREAT!!!",
    "The response was great!!",
    "What a terrible outcome!!!!!",
    "Is this really good??",
    "Was the plan a failure???",
    "Why is everything so awful????",
    "Is it good?",
    # boosters and dampeners, with distance damping
    "VADER is very smart, handsome, and funny.",
    "The schools are extremely good.",
    "The schools are extremely very good.",
    "The economy is incredibly strong in Texas.",
    "The results were slightly disappointing.",
    "The plan was somewhat helpful to families.",
    "The service was barely acceptable.",
    "The storm was really very terrible.",
    # caps emphasis
    "VADER is VERY SMART, handsome, and FUNNY.",
    "VADER is VERY SMART, handsome, and FUNNY!!!",
    "VADER is VERY SMART, uber handsome, and FRIGGIN FUNNY!!!",
    "THE NEWS IS GOOD",
    "The news is GOOD but the weather is BAD.",
    "Today SUX!",
    # negation
    "VADER is not smart, handsome, nor funny.",
    "The food was not good.",
    "The food was not very good.",
    "The food was not really very good.",
    "The hospital isn't bad.",
    "At least it isn't a horrible book.",
    "Never good.",
    "Sentiment analysis has never been good.",
    "Sentiment analysis has never been this good!",
    "Sentiment analysis has never been so good.",
    "The rally was without a doubt an excellent idea.",
    "Without a doubt, excellent idea.",
    "Not bad at all",
    "There was no good reason for the delay.",
    "There is no problem.",
    "no",
    "The mayor said no, he is not happy.",
    "Nothing about the deal was fair.",
    "The town rarely sees good news.",
    "The result was no worse or better.",
    # but-clause
    "The plot was good, but the characters are uncompelling and the dialog is not great.",
    "The weather was nice but the traffic was terrible.",
    "The city is great but expensive but friendly.",
    "Good good good but good.",
    "Great schools, great parks, but great taxes too.",
    "Today only kinda sux! But I'll get by, lol",
    # least / kind of
    "Roger Dodger is one of the most compelling variations on this theme.",
    "Roger Dodger is at least compelling as a variation on the theme.",
    "Roger Dodger is one of the least compelling variations on this theme.",
    "This is the very least helpful plan.",
    "Least helpful advice ever.",
    "The book was only kind of good.",
    "The plan is kind of terrible.",
    "The town is sort of nice.",
    # special-case idioms
    "With VADER, sentiment analysis is the shit!",
    "On the other hand, VADER is quite bad ass",
    "VADER is such a badass!",
    "Not such a badass after all.",
    "The new stadium is the bomb.",
    "Yeah right, that was a great plan.",
    "That policy was the kiss of death for the project.",
    "The chowder here is to die for.",
    "The film is a beating heart of hope.",
    "Meet me at the bus stop.",
    "Most automated sentiment analysis tools are shit.",
    "Other sentiment analysis tools can be quite bad.",
    # emoticons that survive punctuation stripping
    "Make sure you :) or :D today!",
    "The game ended :(",
    # news-style mixed text
    "Wildfires spread across California, destroying homes and killing three people.",
    "Governor praises strong job growth in Colorado\nEconomy; Jobs; Colorado",
    "Families moving from Oregon to Idaho cite lower costs and better schools.",
    "Lawmakers in Washington, D.C. debated the bill amid bitter partisan anger.",
    "Officials in Florida celebrated a wonderful year of tourism, but hurricanes caused terrible damage.",
]

for s in SENTENCES:
    r = vs.SentimentIntensityAnalyzer().polarity_scores(s)
    esc = s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
    print(f"{esc}\t{r['compound']!r}\t{r['pos']!r}\t{r['neg']!r}\t{r['neu']!r}")
