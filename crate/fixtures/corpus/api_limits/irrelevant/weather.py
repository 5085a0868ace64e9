import requests


def forecast(city):
    response = requests.get("https://weather.example.com/v1/forecast", params={"q": city}, timeout=10)
    response.raise_for_status()
    return response.json()["daily"]
