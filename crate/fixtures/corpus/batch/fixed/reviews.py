import boto3
from botocore.config import Config

comprehend = boto3.client("comprehend", config=Config(retries={"max_attempts": 10, "mode": "adaptive"}))


def sentiments(reviews):
    results = []
    for start in range(0, len(reviews), 25):
        chunk = reviews[start:start + 25]
        response = comprehend.batch_detect_sentiment(TextList=chunk, LanguageCode="en")
        results.extend(r["Sentiment"] for r in response["ResultList"])
    return results
