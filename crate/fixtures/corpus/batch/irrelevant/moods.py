POSITIVE = {"good", "great", "excellent"}


class Lexicon:
    def detect_sentiment(self, Text):
        words = set(Text.lower().split())
        return "POSITIVE" if words & POSITIVE else "NEUTRAL"


def sentiments(reviews):
    lexicon = Lexicon()
    return [lexicon.detect_sentiment(Text=r) for r in reviews]
