from google.cloud import language_v1

client = language_v1.LanguageServiceClient()


def classify(text):
    document = language_v1.Document(content=text, type_=language_v1.Document.Type.PLAIN_TEXT)
    sentiment = client.analyze_sentiment(request={"document": document}).document_sentiment
    if sentiment.magnitude < 0.5:
        return "neutral"
    if sentiment.score > 0.25:
        return "positive"
    if sentiment.score < -0.25:
        return "negative"
    return "mixed"
