from azure.ai.textanalytics import TextAnalyticsClient
def main():
    ...
    cog_client = TextAnalyticsClient(endpoint=cog_endpoint, credential=credential)
        # Analyze each text file in the reviews folder
        for file_name in os.listdir(reviews_folder):
            # Read the file contents
            ...
            detectedLanguage = cog_client.detect_language(documents=[text])[0]
            ...
