from azure.ai.textanalytics import TextAnalyticsClient
def main():
    ...
    # Load documents directly from files for batch calls
    documents = [open(os.path.join(reviews_folder, file_name), encoding='utf8').read() for file_name in os.listdir(reviews_folder)]
    # Batch process for language and sentiment detection
    detected_languages = cog_client.detect_language(documents=documents)
