class Result:
    def __init__(self, score):
        self.score = score


def passed(results):
    return [r for r in results if r.score >= 50]
