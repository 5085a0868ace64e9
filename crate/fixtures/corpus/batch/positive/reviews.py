import boto3
from botocore.config import Config

comprehend = boto3.client("comprehend", config=Config(retries={"max_attempts": 10, "mode": "adaptive"}))


def sentiments(reviews):
    results = []
    for review in reviews:
        response = comprehend.detect_sentiment(Text=review, LanguageCode="en")
        results.append((response["Sentiment"], response["SentimentScore"]))
    return results
