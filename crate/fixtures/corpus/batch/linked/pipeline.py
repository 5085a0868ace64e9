import boto3
from botocore.config import Config

translate = boto3.client("translate", config=Config(retries={"mode": "standard"}))


def to_french(text):
    result = translate.translate_text(Text=text, SourceLanguageCode="en", TargetLanguageCode="fr")
    return result["TranslatedText"]


def localize(record):
    record["title_fr"] = to_french(record["title"])
    return record
